use crate::countdown::{apply_operation, OptimalPath, Problem};
use crate::trajectory::{prompt_event, NodeIndex, Trajectory, TrajectoryEvent};

/// The prompt followed by the first `n` optimal operations written as
/// explored first children. For `n = N` the final operation ends in the
/// goal check instead of a generated node.
pub fn make_hint_prefix(problem: &Problem, path: &OptimalPath, n: usize) -> Trajectory {
    let n = n.min(path.ops.len());
    let mut events = vec![prompt_event(problem)];
    let mut state = problem.root();
    let mut index = NodeIndex::root();
    for op in &path.ops[..n] {
        let child = apply_operation(&state, op).expect("optimal path ops are legal");
        events.push(TrajectoryEvent::ExploringOperation { op: *op, resulting: child.remaining.clone() });
        if child.is_leaf() {
            let value = child.remaining[0];
            events.push(if value == problem.target {
                TrajectoryEvent::VerifySuccess { value, target: problem.target }
            } else {
                TrajectoryEvent::VerifyFail { value, target: problem.target }
            });
        } else {
            index = index.child(0);
            events.push(TrajectoryEvent::GeneratedNode {
                index: index.clone(),
                target: problem.target,
                numbers: child.remaining.clone(),
                op: *op,
            });
            events.push(TrajectoryEvent::MovingToNode { index: index.clone() });
            events.push(TrajectoryEvent::CurrentState {
                target: problem.target,
                numbers: child.remaining.clone(),
                ops: child.applied.clone(),
            });
        }
        state = child;
    }
    Trajectory::from_events(problem.id, events)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trajectory::{verify, Terminal};

    fn worked() -> (Problem, OptimalPath) {
        let p = Problem::new(0, 25, vec![56, 58, 15, 8]);
        let ops = ["58-56=2", "15+8=23", "2+23=25"].iter().map(|s| s.parse().unwrap()).collect();
        let path = OptimalPath::from_ops(&p, ops).unwrap();
        (p, path)
    }

    #[test]
    fn lengths_per_n() {
        let (p, path) = worked();
        assert_eq!(make_hint_prefix(&p, &path, 0).len(), 1);
        assert_eq!(make_hint_prefix(&p, &path, 1).len(), 5);
        assert_eq!(make_hint_prefix(&p, &path, 2).len(), 9);
        assert_eq!(make_hint_prefix(&p, &path, 3).len(), 11);
    }

    #[test]
    fn full_hint_is_a_solution() {
        let (p, path) = worked();
        let t = make_hint_prefix(&p, &path, 3);
        assert!(t.text.ends_with("25,25 equal: Goal Reached"));
        assert_eq!(t.terminal, Terminal::GoalReached);
        assert_eq!(verify(&t, &p).metric(), 1);
    }

    #[test]
    fn one_step_hint_text() {
        let (p, path) = worked();
        assert_eq!(
            make_hint_prefix(&p, &path, 1).text,
            "Current State: 25:[56, 58, 15, 8], Operations: []\n\
             Exploring Operation: 58-56=2, Resulting Numbers: [15, 8, 2]\n\
             Generated Node #0,0: 25:[15, 8, 2] Operation: 58-56=2\n\
             Moving to Node #0,0\n\
             Current State: 25:[15, 8, 2], Operations: ['58-56=2']"
        );
    }
}

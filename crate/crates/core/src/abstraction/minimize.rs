use crate::fsm::Fsm;

/// Moore-style partition refinement on the reachable part of `m`.
///
/// Blocks are named after their lexicographically smallest member and listed
/// in order of their earliest member in `m.states`.
pub fn minimize(m: &Fsm) -> Fsm {
    let reachable = m.reachable();
    let mut alive = vec![false; m.n()];
    for &s in &reachable {
        alive[s] = true;
    }
    let members: Vec<usize> = (0..m.n()).filter(|&s| alive[s]).collect();

    // block[s] for live states; initial split by output rows.
    let mut block = vec![usize::MAX; m.n()];
    let mut count = assign_blocks(&members, &mut block, |s| m.table[s].iter().map(|&(o, _)| o).collect());
    loop {
        let prev = block.clone();
        let refined = assign_blocks(&members, &mut block, |s| {
            let mut sig = vec![prev[s]];
            sig.extend(m.table[s].iter().map(|&(_, n)| prev[n]));
            sig
        });
        if refined == count {
            break;
        }
        count = refined;
    }

    let mut rep: Vec<Option<usize>> = vec![None; count];
    let mut name_of: Vec<Option<usize>> = vec![None; count];
    for &s in &members {
        let b = block[s];
        rep.get_mut(b).unwrap().get_or_insert(s);
        let slot = &mut name_of[b];
        if slot.is_none_or(|cur| m.states[s] < m.states[cur]) {
            *slot = Some(s);
        }
    }
    // `members` is ascending, so block indices already follow earliest member.
    let states: Vec<String> = name_of.iter().map(|n| m.states[n.unwrap()].clone()).collect();
    let table = rep
        .iter()
        .map(|r| m.table[r.unwrap()].iter().map(|&(o, n)| (o, block[n])).collect())
        .collect();
    Fsm {
        states,
        initial: block[m.initial],
        inputs: m.inputs.clone(),
        outputs: m.outputs.clone(),
        table,
    }
}

/// Renumbers blocks by signature, in order of first occurrence over
/// `members`. Returns the number of blocks.
fn assign_blocks<F: Fn(usize) -> Vec<usize>>(members: &[usize], block: &mut [usize], signature: F) -> usize {
    let mut ids: std::collections::HashMap<Vec<usize>, usize> = std::collections::HashMap::new();
    let sigs: Vec<Vec<usize>> = members.iter().map(|&s| signature(s)).collect();
    for (&s, sig) in members.iter().zip(sigs) {
        let next = ids.len();
        block[s] = *ids.entry(sig).or_insert(next);
    }
    ids.len()
}

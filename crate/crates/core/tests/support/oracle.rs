//! Reference answers computed without the Huffman construction.

/// Minimum of Σ frequency × depth over every rooted tree whose internal nodes have
/// between 2 and `k` children and whose leaves are exactly `freqs`. A lone leaf
/// still hangs below the root, at depth 1.
///
/// Exhaustive over set partitions: the cost of a subtree is the best way to split its
/// leaf set into 2..=k blocks, each block being a leaf or a deeper subtree.
pub fn min_weighted_path_length(freqs: &[u64], k: usize) -> u64 {
    let t = freqs.len();
    assert!((1..=12).contains(&t) && k >= 2);
    if t == 1 {
        return freqs[0];
    }
    let full = (1usize << t) - 1;
    let weight = |mask: usize| -> u64 {
        (0..t)
            .filter(|i| mask >> i & 1 == 1)
            .map(|i| freqs[i])
            .sum()
    };
    // best[mask]: cost below an internal node holding exactly the leaves in `mask`
    let mut best = vec![u64::MAX; full + 1];
    let mut masks: Vec<usize> = (1..=full).collect();
    masks.sort_by_key(|m| m.count_ones());
    for mask in masks {
        if mask.count_ones() < 2 {
            continue;
        }
        let mut blocks = Vec::new();
        best[mask] = partitions(mask, k, &mut blocks, &best, &weight);
    }
    best[full]
}

fn block_cost(block: usize, best: &[u64], weight: &dyn Fn(usize) -> u64) -> u64 {
    let below = if block.count_ones() == 1 {
        0
    } else {
        best[block]
    };
    below + weight(block)
}

/// Minimum over partitions of `rest` into blocks (in addition to `blocks`) with a total
/// of 2..=k blocks. Each new block contains the lowest remaining element.
fn partitions(
    rest: usize,
    k: usize,
    blocks: &mut Vec<usize>,
    best: &[u64],
    weight: &dyn Fn(usize) -> u64,
) -> u64 {
    if rest == 0 {
        if blocks.len() < 2 {
            return u64::MAX;
        }
        return blocks.iter().map(|&b| block_cost(b, best, weight)).sum();
    }
    if blocks.len() == k {
        return u64::MAX;
    }
    let low = rest & rest.wrapping_neg();
    let others = rest & !low;
    let mut out = u64::MAX;
    // iterate over all subsets of `others` to join `low`
    let mut sub = others;
    loop {
        let block = low | sub;
        if block != rest || !blocks.is_empty() {
            blocks.push(block);
            out = out.min(partitions(rest & !block, k, blocks, best, weight));
            blocks.pop();
        }
        if sub == 0 {
            break;
        }
        sub = (sub - 1) & others;
    }
    out
}

/// Code lengths from the two-smallest-merge binary Huffman algorithm, in input order.
pub fn binary_huffman_code_lengths(freqs: &[u64]) -> Vec<usize> {
    let mut lengths = vec![0; freqs.len()];
    if freqs.len() == 1 {
        return vec![1];
    }
    let mut pool: Vec<(u64, Vec<usize>)> = freqs
        .iter()
        .enumerate()
        .map(|(i, &f)| (f, vec![i]))
        .collect();
    while pool.len() > 1 {
        pool.sort_by_key(|(f, _)| std::cmp::Reverse(*f));
        let (fa, a) = pool.pop().unwrap();
        let (fb, b) = pool.pop().unwrap();
        for &i in a.iter().chain(&b) {
            lengths[i] += 1;
        }
        pool.push((fa + fb, a.into_iter().chain(b).collect()));
    }
    lengths
}

/// Σ f·len for code lengths in input order.
pub fn cost(freqs: &[u64], lengths: &[usize]) -> u64 {
    freqs.iter().zip(lengths).map(|(&f, &l)| f * l as u64).sum()
}

//! Cap and cup removal by word-box transposition.
//!
//! A pregroup diagram is a row of word states wired together by cups (and
//! possibly caps). Following every wire through cap/cup zig-zags gives a
//! graph on the words. Words owning an open output wire are kept as
//! states; every other word is bent around the cup that links it to an
//! already placed word, becoming a box whose domain is that word's wire.
//! The resulting diagram has no caps and, for tree-shaped linkages, no cups.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::diagram::{Diagram, DiagramBox, Factor, PregroupType, Side};

use super::GrammarError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum End {
    Word { word: usize, port: usize },
    CapLeg { cap: usize, leg: usize },
    Output(usize),
}

struct Word {
    name: String,
    ty: PregroupType,
}

fn is_state(op: &DiagramBox) -> bool {
    op.dom.is_empty() && !op.is_cap()
}

fn is_transposed(op: &DiagramBox) -> bool {
    !op.dom.is_empty() && !op.is_cup()
}

/// Head factor and side for a box bent onto a wire of type `dom`, when the
/// name carries no explicit marker.
fn canonical_head(dom: &Factor) -> (Factor, Side) {
    if dom.z > 0 {
        (dom.left_adjoint(), Side::Left)
    } else {
        (dom.right_adjoint(), Side::Right)
    }
}

fn canonical_index(cod: &PregroupType, head: &Factor) -> usize {
    cod.factors().iter().take_while(|f| f.z > head.z).count()
}

fn insert_head(cod: &PregroupType, index: usize, head: &Factor) -> PregroupType {
    let mut v = cod.0.clone();
    v.insert(index, head.clone());
    PregroupType(v)
}

/// Name of the transposed box. Bends that the canonical rule would not
/// reconstruct carry an explicit `#index:factor` marker.
fn transposed_name(name: &str, ty: &PregroupType, head_port: usize, dom: &Factor) -> String {
    let rest = without(ty, head_port);
    let (head, _) = canonical_head(dom);
    let canonical = canonical_index(&rest, &head) == head_port && ty.factors()[head_port] == head;
    if canonical {
        name.to_string()
    } else {
        format!("{name}#{head_port}:{}", ty.factors()[head_port])
    }
}

fn without(ty: &PregroupType, port: usize) -> PregroupType {
    let mut v = ty.0.clone();
    v.remove(port);
    PregroupType(v)
}

/// Recovers `(word, original type, head port, side)` from a transposed box.
fn untranspose(op: &DiagramBox) -> Result<(String, PregroupType, usize, Side), GrammarError> {
    let [dom] = op.dom.factors() else {
        return Err(GrammarError::NotPregroup(format!("box {op} has more than one input wire")));
    };
    let explicit = op.name.rsplit_once('#').and_then(|(name, marker)| {
        let (idx, factor) = marker.split_once(':')?;
        let idx: usize = idx.parse().ok()?;
        let factor: PregroupType = factor.parse().ok()?;
        match factor.factors() {
            [f] if idx <= op.cod.len() => Some((name.to_string(), idx, f.clone())),
            _ => None,
        }
    });
    let (name, index, head) = match explicit {
        Some(found) => found,
        None => {
            let (head, _) = canonical_head(dom);
            (op.name.clone(), canonical_index(&op.cod, &head), head)
        }
    };
    let side = if head.contracts_with(dom) { Side::Left } else { Side::Right };
    Ok((name, insert_head(&op.cod, index, &head), index, side))
}

/// Eliminates caps and cups by transposing word boxes. Diagrams with no
/// caps that are already in transposed form are returned unchanged.
pub fn remove_caps(d: &Diagram) -> Result<Diagram, GrammarError> {
    let has_caps = d.boxes().any(DiagramBox::is_cap);
    let has_cups = d.boxes().any(DiagramBox::is_cup);
    let has_transposed = d.boxes().any(is_transposed);
    if !has_caps && (!has_cups || has_transposed) {
        return Ok(d.clone());
    }
    if has_transposed {
        return Err(GrammarError::NotPregroup("caps next to transposed boxes".into()));
    }
    if !d.dom().is_empty() {
        return Err(GrammarError::NotPregroup(format!(
            "pregroup diagram must start from I, got {}",
            d.dom()
        )));
    }

    // Wire up the diagram.
    let mut words: Vec<Word> = Vec::new();
    let mut caps = 0usize;
    let mut links: HashMap<End, End> = HashMap::new();
    let mut running: Vec<End> = Vec::new();
    for layer in d.layers() {
        let op = &layer.op;
        let at = layer.offset;
        if op.is_cap() {
            running.splice(at..at, [End::CapLeg { cap: caps, leg: 0 }, End::CapLeg { cap: caps, leg: 1 }]);
            caps += 1;
        } else if op.is_cup() {
            let a = running.remove(at);
            let b = running.remove(at);
            links.insert(a, b);
            links.insert(b, a);
        } else if is_state(op) {
            let w = words.len();
            words.push(Word {
                name: op.name.clone(),
                ty: op.cod.clone(),
            });
            running.splice(at..at, (0..op.cod.len()).map(|port| End::Word { word: w, port }));
        } else {
            return Err(GrammarError::NotPregroup(format!("box {op} is neither a word, a cup nor a cap")));
        }
    }
    for (j, end) in running.iter().enumerate() {
        links.insert(*end, End::Output(j));
    }

    // Follow wires through cup/cap zig-zags.
    let follow = |start: End| -> Result<End, GrammarError> {
        let mut cur = links[&start];
        for _ in 0..=links.len() {
            match cur {
                End::CapLeg { cap, leg } => cur = links[&End::CapLeg { cap, leg: 1 - leg }],
                other => return Ok(other),
            }
        }
        Err(GrammarError::NotPregroup("closed loop of caps and cups".into()))
    };
    for cap in 0..caps {
        let a = follow(End::CapLeg { cap, leg: 1 })?;
        let b = follow(End::CapLeg { cap, leg: 0 })?;
        if matches!((a, b), (End::Output(_), End::Output(_))) {
            return Err(GrammarError::IrreducibleCap);
        }
    }
    let mut neighbours: Vec<Vec<(usize, End)>> = vec![Vec::new(); words.len()];
    let mut outputs: BTreeMap<usize, (usize, usize)> = BTreeMap::new();
    for (w, word) in words.iter().enumerate() {
        for port in 0..word.ty.len() {
            match follow(End::Word { word: w, port })? {
                End::Output(j) => {
                    outputs.insert(j, (w, port));
                }
                other => neighbours[w].push((port, other)),
            }
        }
    }

    // Emission: output-owning words become states, then words are placed
    // in text order as soon as a placed neighbour offers a wire.
    let mut out = Diagram::id(PregroupType::unit());
    let mut live: Vec<(usize, usize)> = Vec::new();
    let mut placed = vec![false; words.len()];
    // child -> (parent word, parent port, child port), first claim wins
    let mut claims: BTreeMap<usize, (usize, usize, usize)> = BTreeMap::new();
    let mut residual: BTreeSet<((usize, usize), (usize, usize))> = BTreeSet::new();

    let place_state = |w: usize, out: &mut Diagram, live: &mut Vec<(usize, usize)>| -> Result<(), GrammarError> {
        let offset = live.len();
        out.push(offset, DiagramBox::word(words[w].name.clone(), words[w].ty.clone()))?;
        live.extend((0..words[w].ty.len()).map(|p| (w, p)));
        Ok(())
    };
    let mut claim = |w: usize, placed: &[bool], claims: &mut BTreeMap<usize, (usize, usize, usize)>| {
        for &(port, other) in &neighbours[w] {
            let End::Word { word: v, port: vp } = other else { continue };
            if v == w && port < vp {
                residual.insert(((w, port), (v, vp)));
            }
            if placed[v] {
                continue;
            }
            match claims.get(&v) {
                None => {
                    claims.insert(v, (w, port, vp));
                }
                Some(&(pw, pp, _)) if (pw, pp) == (w, port) => {}
                Some(_) => {
                    let edge = if (w, port) < (v, vp) {
                        ((w, port), (v, vp))
                    } else {
                        ((v, vp), (w, port))
                    };
                    residual.insert(edge);
                }
            }
        }
    };

    let roots: Vec<usize> = {
        let mut seen = BTreeSet::new();
        outputs.values().map(|&(w, _)| w).filter(|w| seen.insert(*w)).collect()
    };
    for &w in &roots {
        place_state(w, &mut out, &mut live)?;
        placed[w] = true;
    }
    for &w in &roots {
        claim(w, &placed, &mut claims);
    }
    loop {
        let next = claims.keys().copied().find(|v| !placed[*v]);
        match next {
            Some(v) => {
                let (pw, pp, vp) = claims[&v];
                let offset = live.iter().position(|&e| e == (pw, pp)).expect("claimed wire is live");
                let dom_factor = words[pw].ty.factors()[pp].clone();
                let name = transposed_name(&words[v].name, &words[v].ty, vp, &dom_factor);
                let cod = without(&words[v].ty, vp);
                out.push(offset, DiagramBox::new(name, PregroupType(vec![dom_factor]), cod))?;
                let ports: Vec<(usize, usize)> = (0..words[v].ty.len()).filter(|&p| p != vp).map(|p| (v, p)).collect();
                live.splice(offset..=offset, ports);
                placed[v] = true;
                claims.remove(&v);
                claim(v, &placed, &mut claims);
            }
            None => match (0..words.len()).find(|&w| !placed[w]) {
                Some(w) => {
                    place_state(w, &mut out, &mut live)?;
                    placed[w] = true;
                    claim(w, &placed, &mut claims);
                }
                None => break,
            },
        }
    }

    // Cups left over from non-tree linkages.
    let mut leftover: Vec<((usize, usize), (usize, usize))> = residual.into_iter().collect();
    while !leftover.is_empty() {
        let found = live.windows(2).enumerate().find_map(|(i, pair)| {
            leftover
                .iter()
                .position(|&(a, b)| (pair[0], pair[1]) == (a, b) || (pair[0], pair[1]) == (b, a))
                .map(|k| (i, k))
        });
        let Some((i, k)) = found else {
            return Err(GrammarError::NonPlanar(format!("{} cups cannot be made adjacent", leftover.len())));
        };
        let (l, r) = (live[i], live[i + 1]);
        let lf = &words[l.0].ty.factors()[l.1];
        let rf = &words[r.0].ty.factors()[r.1];
        if !lf.contracts_with(rf) {
            return Err(GrammarError::NonPlanar(format!("wires {lf} and {rf} cannot meet in a cup")));
        }
        out.push(i, DiagramBox::cup(lf, rf))?;
        live.drain(i..i + 2);
        leftover.swap_remove(k);
    }
    if out.cod() != d.cod() {
        return Err(GrammarError::NonPlanar(format!(
            "open wires {} reordered to {}",
            d.cod(),
            out.cod()
        )));
    }
    Ok(out)
}

#[derive(Debug)]
struct Node {
    name: String,
    ty: PregroupType,
    children: Vec<(usize, usize, Side)>,
}

fn in_order(nodes: &[Node], n: usize, out: &mut Vec<(String, PregroupType)>) {
    let mut kids = nodes[n].children.clone();
    kids.sort_by_key(|k| std::cmp::Reverse(k.0));
    for &(_, child, side) in &kids {
        if side == Side::Left {
            in_order(nodes, child, out);
        }
    }
    out.push((nodes[n].name.clone(), nodes[n].ty.clone()));
    for &(_, child, side) in &kids {
        if side == Side::Right {
            in_order(nodes, child, out);
        }
    }
}

/// The words of a pregroup or capless diagram with their pregroup types,
/// in sentence order. Transposed boxes are bent back to recover both.
pub fn word_sequence(d: &Diagram) -> Result<Vec<(String, PregroupType)>, GrammarError> {
    if !d.boxes().any(is_transposed) {
        return Ok(d
            .boxes()
            .filter(|op| is_state(op))
            .map(|op| (op.name.clone(), op.cod.clone()))
            .collect());
    }
    let mut nodes: Vec<Node> = Vec::new();
    let mut roots = Vec::new();
    let mut running: Vec<(usize, usize)> = Vec::new();
    for layer in d.layers() {
        let op = &layer.op;
        let at = layer.offset;
        if op.is_cup() {
            running.drain(at..at + 2);
        } else if op.is_cap() {
            return Err(GrammarError::NotPregroup(format!(
                "cap at layer with offset {at} next to transposed boxes"
            )));
        } else if op.dom.is_empty() {
            let id = nodes.len();
            nodes.push(Node {
                name: op.name.clone(),
                ty: op.cod.clone(),
                children: Vec::new(),
            });
            roots.push(id);
            running.splice(at..at, (0..op.cod.len()).map(|p| (id, p)));
        } else {
            let (name, ty, head, side) = untranspose(op)?;
            let (parent, port) = running[at];
            let id = nodes.len();
            nodes[parent].children.push((port, id, side));
            let ports: Vec<(usize, usize)> = (0..ty.len()).filter(|&p| p != head).map(|p| (id, p)).collect();
            nodes.push(Node {
                name,
                ty,
                children: Vec::new(),
            });
            running.splice(at..=at, ports);
        }
    }
    let mut out = Vec::new();
    for r in roots {
        in_order(&nodes, r, &mut out);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(s: &str) -> PregroupType {
        s.parse().unwrap()
    }

    fn f(s: &str) -> Factor {
        t(s).0.remove(0)
    }

    #[test]
    fn word_bent_into_effect() {
        // n  (n.r s): one cup, one open sentence wire
        let mut d = Diagram::id(PregroupType::unit());
        d.push(0, DiagramBox::word("alice", t("n"))).unwrap();
        d.push(1, DiagramBox::word("sleeps", t("n.r@s"))).unwrap();
        d.push(0, DiagramBox::cup(&f("n"), &f("n.r"))).unwrap();
        let out = remove_caps(&d).unwrap();
        let expected = Diagram::new(
            PregroupType::unit(),
            vec![
                crate::diagram::Layer {
                    offset: 0,
                    op: DiagramBox::word("sleeps", t("n.r@s")),
                },
                crate::diagram::Layer {
                    offset: 0,
                    op: DiagramBox::new("alice", t("n.r"), PregroupType::unit()),
                },
            ],
        )
        .unwrap();
        assert_eq!(out, expected);
        assert_eq!(word_sequence(&out).unwrap(), word_sequence(&d).unwrap());
        assert_eq!(remove_caps(&out).unwrap(), out);
    }

    #[test]
    fn no_caps_no_change() {
        let d = Diagram::from_box(DiagramBox::word("s0", t("s")));
        assert_eq!(remove_caps(&d).unwrap(), d);
    }

    #[test]
    fn snake_is_straightened() {
        // word a: n, then cap (n.r.. ) zig-zag: a ⊗ cap(n.l.. ) is not needed; use
        // n ⊗ cap(n.r, n) then cup(n, n.r) leaves the n from the cap open
        let mut d = Diagram::id(PregroupType::unit());
        d.push(0, DiagramBox::word("a", t("n"))).unwrap();
        d.push(1, DiagramBox::cap(&f("n.r"), &f("n"))).unwrap();
        d.push(0, DiagramBox::cup(&f("n"), &f("n.r"))).unwrap();
        assert_eq!(d.cod(), &t("n"));
        let out = remove_caps(&d).unwrap();
        assert_eq!(out, Diagram::from_box(DiagramBox::word("a", t("n"))));
    }

    #[test]
    fn cap_on_boundary_is_irreducible() {
        let d = Diagram::from_box(DiagramBox::cap(&f("n"), &f("n.l")));
        assert_eq!(remove_caps(&d), Err(GrammarError::IrreducibleCap));
    }

    #[test]
    fn self_contracting_word() {
        let mut d = Diagram::id(PregroupType::unit());
        d.push(0, DiagramBox::word("root", t("s@n.l.l"))).unwrap();
        d.push(2, DiagramBox::word("odd", t("n.l@n.l.l@n.l"))).unwrap();
        d.push(1, DiagramBox::cup(&f("n.l.l"), &f("n.l"))).unwrap();
        d.push(1, DiagramBox::cup(&f("n.l.l"), &f("n.l"))).unwrap();
        let out = remove_caps(&d).unwrap();
        assert_eq!(out.boxes().filter(|b| b.is_cup()).count(), 1);
        assert_eq!(word_sequence(&out).unwrap(), word_sequence(&d).unwrap());
    }

    #[test]
    fn non_canonical_bend_is_marked() {
        let mut d = Diagram::id(PregroupType::unit());
        d.push(0, DiagramBox::word("a", t("n.l.l"))).unwrap();
        d.push(1, DiagramBox::word("root", t("n.l@s"))).unwrap();
        d.push(0, DiagramBox::cup(&f("n.l.l"), &f("n.l"))).unwrap();
        let out = remove_caps(&d).unwrap();
        assert_eq!(out.layers()[1].op.name, "a#0:n.l.l");
        assert_eq!(word_sequence(&out).unwrap(), word_sequence(&d).unwrap());
    }
}

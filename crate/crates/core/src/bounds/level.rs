use std::fmt;

use serde::{Deserialize, Serialize};

use super::{r_of_k, BoundsError};
use crate::maltsev::TermChain;
use crate::relations::Congruence;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkLabel {
    AlphaBeta,
    AlphaGamma,
}

impl fmt::Display for LinkLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LinkLabel::AlphaBeta => "α∧β",
            LinkLabel::AlphaGamma => "α∧γ",
        })
    }
}

/// Witness of `(a,d) ∈ αβ ∘_r αγ`: consecutive elements are related by the
/// labelled meet, labels alternate, and a leading `α∧γ` counts one extra
/// (identity) `α∧β` factor.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainCertificate {
    pub k: usize,
    pub r: usize,
    pub elements: Vec<usize>,
    pub links: Vec<LinkLabel>,
    pub verified: Vec<bool>,
    /// Links before equal neighbours and same-label runs were merged.
    pub expanded_links: usize,
}

impl ChainCertificate {
    /// Number of factors of `αβ ∘_h αγ` the chain witnesses.
    pub fn factors(&self) -> usize {
        match self.links.first() {
            Some(LinkLabel::AlphaGamma) => self.links.len() + 1,
            _ => self.links.len(),
        }
    }

    pub fn is_verified(&self) -> bool {
        self.verified.iter().all(|&v| v) && self.factors() <= self.r
    }

    /// Recomputes every link against the given congruences.
    pub fn verify(&self, alpha: &Congruence, beta: &Congruence, gamma: &Congruence) -> Vec<bool> {
        self.elements
            .windows(2)
            .zip(&self.links)
            .map(|(p, label)| related(*label, alpha, beta, gamma, p[0], p[1]))
            .collect()
    }
}

fn related(label: LinkLabel, alpha: &Congruence, beta: &Congruence, gamma: &Congruence, u: usize, v: usize) -> bool {
    alpha.related(u, v)
        && match label {
            LinkLabel::AlphaBeta => beta.related(u, v),
            LinkLabel::AlphaGamma => gamma.related(u, v),
        }
}

struct Builder<'a> {
    chain: &'a TermChain,
    alpha: &'a Congruence,
    beta: &'a Congruence,
    gamma: &'a Congruence,
    elements: Vec<usize>,
    links: Vec<LinkLabel>,
}

impl Builder<'_> {
    fn d(&self, i: usize, args: [usize; 4]) -> usize {
        self.chain.value(i, args)
    }

    fn step(&mut self, to: usize, label: LinkLabel, stage: &str) -> Result<(), BoundsError> {
        let from = *self.elements.last().expect("nonempty");
        if !related(label, self.alpha, self.beta, self.gamma, from, to) {
            return Err(BoundsError::LinkFails {
                index: self.links.len(),
                stage: stage.to_string(),
                from,
                to,
                label,
            });
        }
        self.elements.push(to);
        self.links.push(label);
        Ok(())
    }

    /// From `u` to `v` through `d_j(u,p,q,v)`, given `u γ p αβ q γ v` and `u α v`.
    /// Forward links alternate `α∧γ, α∧β, ...`; reversed, the chain runs
    /// through `d_{k-j}(v,q,p,u)`.
    fn block(&mut self, [u, p, q, v]: [usize; 4], reversed: bool, stage: &str) -> Result<(), BoundsError> {
        let k = self.chain.k();
        for j in 1..=k {
            let (elem, label) = if reversed {
                (self.d(k - j, [v, q, p, u]), label_of(k - j))
            } else {
                (self.d(j, [u, p, q, v]), label_of(j - 1))
            };
            self.step(elem, label, stage)?;
        }
        Ok(())
    }
}

/// Label of link `j` in a forward block.
fn label_of(j: usize) -> LinkLabel {
    if j.is_multiple_of(2) {
        LinkLabel::AlphaGamma
    } else {
        LinkLabel::AlphaBeta
    }
}

/// Builds and verifies the witness of `(a,d) ∈ αβ ∘_r αγ`, `r = r(k)`, from
/// a term chain `d_0, ..., d_k` and `a β b γ c β d`, `a α d`.
///
/// Chains with fewer than three links are padded to `k = 3`.
#[allow(clippy::too_many_arguments)]
pub fn build_level_chain(
    chain: &TermChain,
    [a, b, c, d]: [usize; 4],
    alpha: &Congruence,
    beta: &Congruence,
    gamma: &Congruence,
) -> Result<ChainCertificate, BoundsError> {
    if !alpha.related(a, d) {
        return Err(BoundsError::Precondition(format!("({a}, {d}) not in α")));
    }
    if !(beta.related(a, b) && gamma.related(b, c) && beta.related(c, d)) {
        return Err(BoundsError::Precondition(format!("not a β {b} γ {c} β d")));
    }
    let chain = &chain.padded(3);
    let k = chain.k();
    let r = r_of_k(k as u64)? as usize;
    let mut bld = Builder {
        chain,
        alpha,
        beta,
        gamma,
        elements: vec![a],
        links: Vec::new(),
    };
    let abcd = |bld: &Builder, i: usize| bld.d(i, [a, b, c, d]);
    let abbd = |bld: &Builder, i: usize| bld.d(i, [a, b, b, d]);

    use LinkLabel::{AlphaBeta, AlphaGamma};
    bld.step(abcd(&bld, 1), AlphaBeta, "start")?;
    if k % 2 == 1 {
        bld.step(abbd(&bld, 1), AlphaGamma, "start")?;
        for i in (1..k - 2).step_by(2) {
            let corners = [abbd(&bld, i), abcd(&bld, i + 1), abcd(&bld, i + 2), abbd(&bld, i + 2)];
            bld.block(corners, false, &format!("block {i}"))?;
        }
        bld.step(abcd(&bld, k - 1), AlphaGamma, "end")?;
        bld.step(d, AlphaBeta, "end")?;
    } else {
        let first = [abcd(&bld, 1), abcd(&bld, 2), abcd(&bld, 3), abbd(&bld, 3)];
        bld.block(first, true, "block 1")?;
        let mut reversed = false;
        for i in (3..k - 1).step_by(2) {
            let corners = [abbd(&bld, i), abcd(&bld, i + 1), abcd(&bld, i + 2), abbd(&bld, i + 2)];
            bld.block(corners, reversed, &format!("block {i}"))?;
            reversed = !reversed;
        }
        if *bld.elements.last().expect("nonempty") != d {
            return Err(BoundsError::Precondition("chain does not end at d".into()));
        }
    }
    let expanded_links = bld.links.len();
    let (elements, links) = compress(bld.elements, bld.links);
    let mut cert = ChainCertificate {
        k,
        r,
        elements,
        links,
        verified: Vec::new(),
        expanded_links,
    };
    cert.verified = cert.verify(alpha, beta, gamma);
    Ok(cert)
}

/// Drops links between equal elements, then merges runs of equal labels.
fn compress(elements: Vec<usize>, links: Vec<LinkLabel>) -> (Vec<usize>, Vec<LinkLabel>) {
    let mut els = vec![elements[0]];
    let mut labs: Vec<LinkLabel> = Vec::new();
    for (e, l) in elements[1..].iter().zip(links) {
        if *e == *els.last().expect("nonempty") {
            continue;
        }
        if labs.last() == Some(&l) {
            *els.last_mut().expect("nonempty") = *e;
        } else {
            els.push(*e);
            labs.push(l);
        }
    }
    (els, labs)
}

/// Congruence indices and elements with `a α d` and `a β b γ c β d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelInstance {
    pub alpha: usize,
    pub beta: usize,
    pub gamma: usize,
    pub elements: [usize; 4],
}

/// Every valid instance over the listed congruences, in lexicographic order.
pub fn level_instances(congruences: &[Congruence]) -> Vec<LevelInstance> {
    let mut out = Vec::new();
    let Some(n) = congruences.first().map(Congruence::size) else {
        return out;
    };
    for (ai, al) in congruences.iter().enumerate() {
        for (bi, be) in congruences.iter().enumerate() {
            for (gi, ga) in congruences.iter().enumerate() {
                for a in 0..n {
                    for b in (0..n).filter(|&b| be.related(a, b)) {
                        for c in (0..n).filter(|&c| ga.related(b, c)) {
                            for d in (0..n).filter(|&d| be.related(c, d) && al.related(a, d)) {
                                out.push(LevelInstance {
                                    alpha: ai,
                                    beta: bi,
                                    gamma: gi,
                                    elements: [a, b, c, d],
                                });
                            }
                        }
                    }
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::builtin;
    use crate::free::DEFAULT_ELEMENT_CAP;
    use crate::maltsev::{condition_ii_setup, extract_terms, lattice_majority_terms, projection_chain};
    use crate::relations::all_congruences;

    #[test]
    fn trivial_algebra_gives_single_point() {
        let id = Congruence::identity(1);
        let cert = build_level_chain(&projection_chain(1), [0; 4], &id, &id, &id).unwrap();
        assert_eq!(cert.elements, vec![0]);
        assert!(cert.links.is_empty());
        assert!(cert.is_verified());
    }

    fn all_certificates(name: &str, chain: &TermChain) -> usize {
        let alg = builtin(name).unwrap();
        let congs = all_congruences(&alg).unwrap();
        let mut max = 0;
        for inst in level_instances(&congs) {
            let cert = build_level_chain(
                chain,
                inst.elements,
                &congs[inst.alpha],
                &congs[inst.beta],
                &congs[inst.gamma],
            )
            .unwrap();
            assert!(cert.is_verified(), "{name}: {inst:?}");
            assert_eq!(cert.elements.first(), Some(&inst.elements[0]));
            assert_eq!(cert.elements.last(), Some(&inst.elements[3]));
            max = max.max(cert.factors());
        }
        max
    }

    #[test]
    fn lattice_certificates_verify() {
        let alg = builtin("lattice2").unwrap();
        let setup = condition_ii_setup(&alg, DEFAULT_ELEMENT_CAP).unwrap();
        let chain = extract_terms(&setup, 3).unwrap();
        assert!(all_certificates("lattice2", &chain) <= 3);
        for k in 4..=7 {
            assert!(all_certificates("lattice2", &chain.padded(k)) <= r_of_k(k as u64).unwrap() as usize);
        }
        for name in ["N5", "M3"] {
            let chain = TermChain::from_terms(&builtin(name).unwrap(), &lattice_majority_terms()).unwrap();
            assert!(all_certificates(name, &chain) <= 3);
            assert!(all_certificates(name, &chain.padded(4)) <= 4);
        }
    }

    #[test]
    fn broken_chain_fails_at_a_link() {
        let alg = builtin("N5").unwrap();
        let congs = all_congruences(&alg).unwrap();
        let mut chain = TermChain::from_terms(&alg, &lattice_majority_terms()).unwrap();
        // d_1(u,v,v,u) := v breaks d_1(x,y,y,x) = x
        for u in 0..5 {
            for v in 0..5 {
                chain.tables[1][((u * 5 + v) * 5 + v) * 5 + u] = v as u8;
            }
        }
        let failed = level_instances(&congs).into_iter().any(|inst| {
            matches!(
                build_level_chain(&chain, inst.elements, &congs[inst.alpha], &congs[inst.beta], &congs[inst.gamma]),
                Err(BoundsError::LinkFails { .. })
            )
        });
        assert!(failed);
    }

    #[test]
    fn preconditions_are_checked() {
        let alg = builtin("set2").unwrap();
        let congs = all_congruences(&alg).unwrap();
        let (id, full) = (&congs[0], &congs[1]);
        let chain = projection_chain(2);
        assert!(matches!(
            build_level_chain(&chain, [0, 0, 0, 1], id, full, full),
            Err(BoundsError::Precondition(_))
        ));
    }
}

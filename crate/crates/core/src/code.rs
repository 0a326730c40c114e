//! Bivariate bicycle codes.
//!
//! A code is defined by two polynomials `A`, `B` in the group algebra of
//! `Z_l x Z_m`. Each monomial `x^a y^b` acts as a cyclic shift on the torus
//! index space, where site `(r, c)` has the flat index `i = r * m + c`. That
//! convention fixes the bit order of every check matrix and syndrome.
//!
//! The check matrices are `Hx = [A | B]` and `Hz = [B^T | A^T]`. Because the
//! group algebra is commutative, `Hx · Hz^T = AB + BA = 0`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gf2::{BitVec, Gf2Matrix};

/// Which check type the syndrome is measured against.
///
/// `ZMemory` samples X errors detected by Z checks (`Hz`); `XMemory` samples
/// Z errors detected by X checks (`Hx`).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Basis {
    #[default]
    ZMemory,
    XMemory,
}

/// A polynomial over `Z_l x Z_m` given by its monomials `x^a y^b`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolyTerms {
    terms: Vec<(usize, usize)>,
    l: usize,
    m: usize,
}

impl PolyTerms {
    pub fn new(l: usize, m: usize, terms: &[(usize, usize)]) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::InvalidPolynomial("no terms".into()));
        }
        for (i, &(a, b)) in terms.iter().enumerate() {
            if a >= l || b >= m {
                return Err(Error::ExponentOutOfRange { a, b, l, m });
            }
            if terms[..i].contains(&(a, b)) {
                return Err(Error::InvalidPolynomial(format!("repeated term x^{a} y^{b}")));
            }
        }
        Ok(Self {
            terms: terms.to_vec(),
            l,
            m,
        })
    }

    /// Parses `a,b` exponent pairs, e.g. `["3,0", "0,1", "0,2"]`.
    pub fn parse(l: usize, m: usize, pairs: &[impl AsRef<str>]) -> Result<Self> {
        let terms = pairs
            .iter()
            .map(|p| parse_pair(p.as_ref()))
            .collect::<Result<Vec<_>>>()?;
        Self::new(l, m, &terms)
    }

    pub fn terms(&self) -> &[(usize, usize)] {
        &self.terms
    }

    pub fn weight(&self) -> usize {
        self.terms.len()
    }

    /// Same monomials, ignoring order.
    pub fn same_terms(&self, other: &PolyTerms) -> bool {
        let mut a = self.terms.clone();
        let mut b = other.terms.clone();
        a.sort_unstable();
        b.sort_unstable();
        self.l == other.l && self.m == other.m && a == b
    }

    /// Sum of the monomial permutation matrices.
    pub fn to_matrix(&self) -> Gf2Matrix {
        let n = self.l * self.m;
        let mut out = Gf2Matrix::zeros(n, n);
        for &(a, b) in &self.terms {
            for i in 0..n {
                let j = shift_index(i, a, b, self.l, self.m);
                out.set(j, i, !out.get(j, i));
            }
        }
        out
    }
}

impl fmt::Display for PolyTerms {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|&(a, b)| match (a, b) {
                (0, 0) => "1".to_string(),
                (a, 0) => format!("x^{a}"),
                (0, b) => format!("y^{b}"),
                (a, b) => format!("x^{a}y^{b}"),
            })
            .collect();
        f.write_str(&parts.join(" + "))
    }
}

fn parse_pair(s: &str) -> Result<(usize, usize)> {
    let (a, b) = s
        .split_once(',')
        .ok_or_else(|| Error::Parse(format!("expected `a,b`, got {s:?}")))?;
    let num = |t: &str| {
        t.trim()
            .parse::<usize>()
            .map_err(|e| Error::Parse(format!("bad exponent {t:?}: {e}")))
    };
    Ok((num(a)?, num(b)?))
}

#[inline]
fn shift_index(i: usize, a: usize, b: usize, l: usize, m: usize) -> usize {
    let (r, c) = (i / m, i % m);
    ((r + a) % l) * m + (c + b) % m
}

/// Permutation matrix of `x^a y^b`: column `(r, c)` has its single one in
/// row `((r + a) mod l, (c + b) mod m)`.
pub fn monomial_matrix(a: usize, b: usize, l: usize, m: usize) -> Result<Gf2Matrix> {
    if a >= l || b >= m {
        return Err(Error::ExponentOutOfRange { a, b, l, m });
    }
    let n = l * m;
    let mut out = Gf2Matrix::zeros(n, n);
    for i in 0..n {
        out.set(shift_index(i, a, b, l, m), i, true);
    }
    Ok(out)
}

/// A bivariate bicycle code with both check matrices.
#[derive(Clone, Debug)]
pub struct BBCode {
    pub name: String,
    pub l: usize,
    pub m: usize,
    pub a: PolyTerms,
    pub b: PolyTerms,
    pub hx: Gf2Matrix,
    pub hz: Gf2Matrix,
    /// Column weight of both check matrices.
    pub w: usize,
    /// `A == B` as term sets.
    pub degenerate: bool,
    pub provenance: String,
}

impl BBCode {
    pub fn n(&self) -> usize {
        2 * self.l * self.m
    }

    pub fn n_checks(&self) -> usize {
        self.l * self.m
    }

    /// Logical qubits, `n - rank(Hx) - rank(Hz)`.
    pub fn k(&self) -> usize {
        self.n() - self.hx.rank() - self.hz.rank()
    }

    /// Check matrix seen by the given memory experiment.
    pub fn check_matrix(&self, basis: Basis) -> &Gf2Matrix {
        match basis {
            Basis::ZMemory => &self.hz,
            Basis::XMemory => &self.hx,
        }
    }

    /// `Hx · Hz^T == 0`.
    pub fn css_holds(&self) -> bool {
        self.hx
            .mul(&self.hz.transpose())
            .map(|p| p.is_zero())
            .unwrap_or(false)
    }

    pub fn syndrome_of(&self, basis: Basis, error: &BitVec) -> Result<BitVec> {
        self.check_matrix(basis).matvec(error)
    }
}

/// Builds the code from its two polynomials.
pub fn build_bb_code(
    l: usize,
    m: usize,
    a: PolyTerms,
    b: PolyTerms,
    name: impl Into<String>,
) -> Result<BBCode> {
    if a.weight() != b.weight() {
        return Err(Error::TermCountMismatch {
            a: a.weight(),
            b: b.weight(),
        });
    }
    if (a.l, a.m) != (l, m) || (b.l, b.m) != (l, m) {
        return Err(Error::InvalidPolynomial(format!(
            "polynomials are not defined over a {l}x{m} torus"
        )));
    }
    let am = a.to_matrix();
    let bm = b.to_matrix();
    let hx = am.hstack(&bm)?.with_sparse_index();
    let hz = bm.transpose().hstack(&am.transpose())?.with_sparse_index();
    let code = BBCode {
        name: name.into(),
        l,
        m,
        degenerate: a.same_terms(&b),
        w: a.weight(),
        a,
        b,
        hx,
        hz,
        provenance: String::new(),
    };
    assert!(code.css_holds(), "CSS condition violated for {}", code.name);
    Ok(code)
}

/// Textual code definition, as found in config files.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeDef {
    pub name: String,
    pub l: usize,
    pub m: usize,
    /// `a,b` exponent pairs of `A`.
    pub a: Vec<String>,
    /// `a,b` exponent pairs of `B`.
    pub b: Vec<String>,
    #[serde(default)]
    pub provenance: Option<String>,
}

impl CodeDef {
    pub fn build(&self) -> Result<BBCode> {
        let a = PolyTerms::parse(self.l, self.m, &self.a)?;
        let b = PolyTerms::parse(self.l, self.m, &self.b)?;
        let mut code = build_bb_code(self.l, self.m, a, b, self.name.clone())?;
        code.provenance = self.provenance.clone().unwrap_or_else(|| "user-defined".into());
        Ok(code)
    }
}

#[derive(Deserialize)]
struct CodeFile {
    #[serde(default)]
    code: Vec<CodeDef>,
}

/// Loads `[[code]]` tables from a TOML document.
pub fn parse_code_defs(text: &str) -> Result<Vec<CodeDef>> {
    let file: CodeFile = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    Ok(file.code)
}

const GROSS_A: [&str; 3] = ["3,0", "0,1", "0,2"];
const GROSS_B: [&str; 3] = ["0,3", "1,0", "2,0"];

/// Built-in code definitions.
pub fn registry_defs() -> Vec<CodeDef> {
    let def = |name: &str, l, m, a: &[&str], b: &[&str], prov: &str| CodeDef {
        name: name.into(),
        l,
        m,
        a: a.iter().map(|s| s.to_string()).collect(),
        b: b.iter().map(|s| s.to_string()).collect(),
        provenance: Some(prov.into()),
    };
    vec![
        def(
            "bb72",
            6,
            6,
            &GROSS_A,
            &GROSS_B,
            "literature: [[72,12,6]], A = x^3 + y + y^2, B = y^3 + x + x^2 (Bravyi et al. 2024)",
        ),
        def(
            "bb108",
            9,
            6,
            &GROSS_A,
            &GROSS_B,
            "literature: [[108,8,10]], A = x^3 + y + y^2, B = y^3 + x + x^2 (Bravyi et al. 2024)",
        ),
        def(
            "gross",
            12,
            6,
            &GROSS_A,
            &GROSS_B,
            "literature: [[144,12,12]] Gross code, A = x^3 + y + y^2, B = y^3 + x + x^2 (Bravyi et al. 2024)",
        ),
        def(
            "bb180",
            15,
            6,
            &GROSS_A,
            &GROSS_B,
            "constructed: Gross-family polynomials on a 15x6 torus; not a published parameter set",
        ),
        def(
            "bb144w4",
            12,
            6,
            &["3,0", "0,1", "0,2", "5,0"],
            &["0,3", "1,0", "2,0", "0,5"],
            "constructed: A = x^3 + y + y^2 + x^5, B = y^3 + x + x^2 + y^5 (Gross polynomials extended symmetrically); weight-4 columns",
        ),
        def(
            "toric6",
            6,
            6,
            &["0,0", "1,0"],
            &["0,0", "0,1"],
            "constructed: A = 1 + x, B = 1 + y on a 6x6 torus (the toric code); weight-2 columns",
        ),
    ]
}

/// All built-in codes.
pub fn registry() -> Vec<BBCode> {
    registry_defs()
        .iter()
        .map(|d| d.build().expect("built-in code definitions are valid"))
        .collect()
}

/// Looks a code up by name in the built-in registry.
pub fn lookup(name: &str) -> Result<BBCode> {
    registry_defs()
        .into_iter()
        .find(|d| d.name == name)
        .ok_or_else(|| Error::UnknownCode(name.to_string()))?
        .build()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_shift_is_identity() {
        assert_eq!(monomial_matrix(0, 0, 3, 4).unwrap(), Gf2Matrix::identity(12));
    }

    #[test]
    fn x_shift_on_2x2() {
        // Index (r, c) -> r*2 + c. x maps (0,c) <-> (1,c): 0<->2, 1<->3.
        let m = monomial_matrix(1, 0, 2, 2).unwrap();
        let expected =
            Gf2Matrix::parse_rows(&["0010", "0001", "1000", "0100"]).unwrap();
        assert_eq!(m, expected);
    }

    #[test]
    fn monomials_compose() {
        let (l, m) = (4, 3);
        for (a1, b1, a2, b2) in [(1, 2, 3, 2), (0, 1, 2, 0), (3, 2, 3, 2)] {
            let prod = monomial_matrix(a1, b1, l, m)
                .unwrap()
                .mul(&monomial_matrix(a2, b2, l, m).unwrap())
                .unwrap();
            let direct = monomial_matrix((a1 + a2) % l, (b1 + b2) % m, l, m).unwrap();
            assert_eq!(prod, direct);
        }
    }

    #[test]
    fn monomial_out_of_range() {
        assert!(matches!(
            monomial_matrix(2, 0, 2, 2),
            Err(Error::ExponentOutOfRange { .. })
        ));
    }

    #[test]
    fn monomial_is_permutation() {
        let p = monomial_matrix(2, 1, 3, 5).unwrap();
        for i in 0..15 {
            assert_eq!(p.row_weight(i), 1);
            assert_eq!(p.col_weight(i), 1);
        }
    }

    #[test]
    fn small_weight_two_code() {
        let a = PolyTerms::parse(2, 2, &["0,0", "1,0"]).unwrap();
        let b = PolyTerms::parse(2, 2, &["0,0", "0,1"]).unwrap();
        let code = build_bb_code(2, 2, a, b, "tiny").unwrap();
        assert!(code.css_holds());
        assert!(code.hz.col_weights().iter().all(|&w| w == 2));
        assert!(code.hx.col_weights().iter().all(|&w| w == 2));
        assert!(!code.degenerate);
    }

    #[test]
    fn equal_polynomials_are_degenerate() {
        let a = PolyTerms::parse(3, 3, &["0,0", "1,0", "0,1"]).unwrap();
        let b = PolyTerms::parse(3, 3, &["0,1", "0,0", "1,0"]).unwrap();
        assert!(build_bb_code(3, 3, a, b, "deg").unwrap().degenerate);
    }

    #[test]
    fn term_count_mismatch() {
        let a = PolyTerms::parse(3, 3, &["0,0", "1,0"]).unwrap();
        let b = PolyTerms::parse(3, 3, &["0,1", "0,0", "1,0"]).unwrap();
        assert!(matches!(
            build_bb_code(3, 3, a, b, "bad"),
            Err(Error::TermCountMismatch { a: 2, b: 3 })
        ));
    }

    #[test]
    fn repeated_terms_rejected() {
        assert!(PolyTerms::parse(3, 3, &["0,0", "0,0"]).is_err());
        assert!(PolyTerms::parse(3, 3, &["0,3"]).is_err());
        assert!(PolyTerms::parse(3, 3, &["0;3"]).is_err());
    }

    #[test]
    fn gross_code_parameters() {
        let g = lookup("gross").unwrap();
        assert_eq!(g.n(), 144);
        assert_eq!(g.n_checks(), 72);
        assert_eq!(g.hz.rows(), 72);
        assert_eq!(g.hz.cols(), 144);
        assert_eq!(g.w, 3);
        assert!(g.hz.col_weights().iter().all(|&w| w == 3));
        assert_eq!(g.k(), 12);
        assert_eq!(2 * (g.n() / 2 - g.hx.rank()), 12);
    }

    #[test]
    fn registry_invariants() {
        let codes = registry();
        assert!(codes.iter().filter(|c| c.w == 3).count() >= 4);
        for n in [72, 108, 144, 180] {
            assert!(codes.iter().any(|c| c.w == 3 && c.n() == n), "missing n={n}");
        }
        assert!(codes.iter().any(|c| c.w == 4 && c.n() == 144));
        for c in &codes {
            assert!(c.css_holds(), "{}", c.name);
            assert!(!c.degenerate, "{}", c.name);
            assert!(!c.provenance.is_empty());
            assert!(c.hx.col_weights().iter().all(|&w| w == c.w), "{}", c.name);
            assert!(c.hz.col_weights().iter().all(|&w| w == c.w), "{}", c.name);
            let mut wx = c.hx.col_weights();
            let mut wz = c.hz.col_weights();
            wx.sort_unstable();
            wz.sort_unstable();
            assert_eq!(wx, wz);
            assert!(c.k() > 0, "{} encodes nothing", c.name);
        }
    }

    #[test]
    fn code_defs_from_toml() {
        let text = r#"
            [[code]]
            name = "mini"
            l = 3
            m = 3
            a = ["0,0", "1,0"]
            b = ["0,0", "0,1"]
        "#;
        let defs = parse_code_defs(text).unwrap();
        assert_eq!(defs.len(), 1);
        let code = defs[0].build().unwrap();
        assert_eq!(code.n(), 18);
        assert_eq!(code.provenance, "user-defined");
    }
}

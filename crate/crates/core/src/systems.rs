//! Built-in field systems and the TOML system-file format.
//!
//! A system file declares a variable order, named polynomial fields, an
//! optional commutation table, an optional norm (tagged `V` or `H`) and an
//! optional chattering-check section:
//!
//! ```toml
//! name = "r4"
//! vars = ["x", "y", "z", "w"]
//!
//! [[field]]
//! name = "f1"
//! components = "y, 0, 1/2*x^2, 1"
//!
//! [[field]]
//! name = "f2"
//! components = "0, 1, 0, 0"
//!
//! [[bracket]]
//! left = "f1"
//! right = "f2"
//! equals = "f3"             # any rational combination of named fields, or "0"
//!
//! [norm]
//! repr = "V"
//! vertices = ["f1 + f2", "f1 - f2", "-f1 + f2", "-f1 - f2"]
//!
//! [chattering]
//! generators = ["f1 + f2", "f1 - f2", "-f1 + f2", "-f1 - f2"]
//! edge = [0, 1]
//! ```
//!
//! An `H` norm lists 1-forms by their coefficients on `dx_1, ..., dx_n`:
//! `constraints = ["1, 0, 0, -y", ...]` and `bounds = ["0, 1, 0, 0", ...]`.

use num_rational::BigRational;
use num_traits::One;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::norm::{HNorm, OneForm, VNorm};
use crate::poly::{
    format_field, lie_bracket, parse_field, parse_poly, Monomial, Poly, PolyVectorField,
};
use crate::scalar::rat;

/// The six fields of the four-dimensional example, in order `f1, ..., f6`.
///
/// `f1 = (y, 0, x^2/2, 1)` and `f2 = d/dy` generate; `f3 = -d/dx`,
/// `f4 = x d/dz`, `f5 = y d/dz` and `f6 = d/dz` are written out explicitly so
/// that the commutation table can be checked against them.
pub fn r4_fields() -> Vec<PolyVectorField> {
    let x = Poly::var(0);
    let y = Poly::var(1);
    let one = Poly::from_int(1);
    let zero = Poly::zero();
    let f1 = PolyVectorField::new(vec![
        y.clone(),
        zero.clone(),
        x.pow(2).scale(&rat(1, 2)),
        one.clone(),
    ]);
    let f2 = PolyVectorField::coordinate(4, 1);
    let f3 = PolyVectorField::coordinate(4, 0).scale(&rat(-1, 1));
    let f6 = PolyVectorField::coordinate(4, 2);
    let f4 = f6.mul_poly(&x);
    let f5 = f6.mul_poly(&y);
    vec![f1, f2, f3, f4, f5, f6]
}

/// The left-invariant frame `g1, ..., g6` of the step-5 Carnot group in
/// Fuller coordinates.
pub fn carnot_fields() -> Vec<PolyVectorField> {
    let x1 = Poly::var(0);
    let x2 = Poly::var(1);
    let x3 = Poly::var(2);
    let one = Poly::from_int(1);
    let zero = Poly::zero();
    let g1 = PolyVectorField::new(vec![
        one.clone(),
        zero.clone(),
        -&x2,
        -&x3,
        -&(&x1 * &x3),
        x3.pow(2).scale(&rat(1, 2)),
    ]);
    let g2 = PolyVectorField::coordinate(6, 1);
    let g3 = PolyVectorField::coordinate(6, 2);
    let g4 = PolyVectorField::new(vec![
        zero.clone(),
        zero.clone(),
        zero.clone(),
        one.clone(),
        x1.clone(),
        -&x3,
    ]);
    let g5 = PolyVectorField::new(vec![
        zero.clone(),
        zero.clone(),
        zero.clone(),
        zero.clone(),
        one.clone(),
        x2.clone(),
    ]);
    let g6 = PolyVectorField::coordinate(6, 5);
    vec![g1, g2, g3, g4, g5, g6]
}

/// A nine-dimensional pair `(f1, f2)` on which the seven-field independence
/// condition holds at the origin.
///
/// Built from `f = f1 + f2 = d/dx1` and
/// `g = f2 - f1 = d/dx2 + x1 d3 + x1^2/2 d4 + x1 x2 d5 + x1^3/6 d6
///       + x1^2 x2/2 d7 + x1 x2^2/2 d8 + (x1^3 x2/6 - x1^2 x3/2) d9`,
/// so that each bracket of length at most four lands on its own coordinate
/// direction at the origin and the length-five brackets only reach `d9`.
pub fn demo9_fields() -> (PolyVectorField, PolyVectorField) {
    let v = |i: usize| Poly::var(i);
    let mono = |e: Vec<u32>, c: BigRational| Poly::from_terms([(Monomial::new(e), c)]);
    let mut g = vec![Poly::zero(); 9];
    g[1] = Poly::from_int(1);
    g[2] = v(0);
    g[3] = mono(vec![2], rat(1, 2));
    g[4] = mono(vec![1, 1], rat(1, 1));
    g[5] = mono(vec![3], rat(1, 6));
    g[6] = mono(vec![2, 1], rat(1, 2));
    g[7] = mono(vec![1, 2], rat(1, 2));
    g[8] = &mono(vec![3, 1], rat(1, 6)) - &mono(vec![2, 0, 1], rat(1, 2));
    let g = PolyVectorField::new(g);
    let f = PolyVectorField::coordinate(9, 0);
    let half = rat(1, 2);
    let f1 = (&f - &g).scale(&half);
    let f2 = (&f + &g).scale(&half);
    (f1, f2)
}

/// Rational linear combination of named fields.
#[derive(Debug, Clone, PartialEq)]
pub struct LinComb(pub Vec<(BigRational, String)>);

impl LinComb {
    /// Parses `"f1 - 2*f3"`, `"1/2*f1"`, or `"0"` over the given field names.
    pub fn parse(src: &str, names: &[String]) -> Result<Self> {
        let p = parse_poly(src, names)?;
        if p.degree() > 1 || p.terms().any(|(m, _)| m.degree() == 0) {
            return Err(Error::Parse(format!(
                "\"{src}\" is not a linear combination of fields"
            )));
        }
        let terms = p
            .terms()
            .map(|(m, c)| {
                let idx = m.exponents().iter().position(|&e| e == 1).unwrap();
                (c.clone(), names[idx].clone())
            })
            .collect();
        Ok(LinComb(terms))
    }

    pub fn evaluate(&self, system: &FieldSystem) -> Result<PolyVectorField> {
        let mut acc = PolyVectorField::zero(system.dimension());
        for (c, name) in &self.0 {
            acc = &acc + &system.field(name)?.scale(c);
        }
        Ok(acc)
    }
}

/// One row of a declared commutation table: `[left, right] = equals`.
#[derive(Debug, Clone, PartialEq)]
pub struct BracketRelation {
    pub left: String,
    pub right: String,
    pub equals: LinComb,
}

#[derive(Debug, Clone)]
pub enum NormSpec {
    V(VNorm),
    H(HNorm),
}

#[derive(Debug, Clone)]
pub struct ChatterSpec {
    pub generators: Vec<PolyVectorField>,
    pub edge: (usize, usize),
}

/// A named collection of polynomial fields with optional norm and checks.
#[derive(Debug, Clone)]
pub struct FieldSystem {
    pub name: String,
    pub vars: Vec<String>,
    pub fields: Vec<(String, PolyVectorField)>,
    pub table: Vec<BracketRelation>,
    pub norm: Option<NormSpec>,
    pub chattering: Option<ChatterSpec>,
}

/// Outcome of checking one table row.
#[derive(Debug, Clone, Serialize)]
pub struct TableCheck {
    pub relation: String,
    pub holds: bool,
}

impl FieldSystem {
    pub fn dimension(&self) -> usize {
        self.vars.len()
    }

    pub fn field(&self, name: &str) -> Result<&PolyVectorField> {
        self.fields
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, f)| f)
            .ok_or_else(|| Error::InvalidInput(format!("unknown field \"{name}\"")))
    }

    fn field_names(&self) -> Vec<String> {
        self.fields.iter().map(|(n, _)| n.clone()).collect()
    }

    /// Checks every row of the declared table exactly.
    pub fn check_table(&self) -> Result<Vec<TableCheck>> {
        self.table
            .iter()
            .map(|rel| {
                let lhs = lie_bracket(self.field(&rel.left)?, self.field(&rel.right)?)?;
                let rhs = rel.equals.evaluate(self)?;
                let shown: Vec<String> = rel
                    .equals
                    .0
                    .iter()
                    .map(|(c, n)| {
                        if c.is_one() {
                            n.clone()
                        } else {
                            format!("{c}*{n}")
                        }
                    })
                    .collect();
                let rhs_text = if shown.is_empty() {
                    "0".to_string()
                } else {
                    shown.join(" + ")
                };
                Ok(TableCheck {
                    relation: format!("[{}, {}] = {}", rel.left, rel.right, rhs_text),
                    holds: lhs == rhs,
                })
            })
            .collect()
    }

    /// Serializes to the TOML system-file format.
    pub fn to_toml(&self) -> String {
        let names = self.field_names();
        let fields = self
            .fields
            .iter()
            .map(|(n, f)| RawField {
                name: n.clone(),
                components: format_field(f, &self.vars),
            })
            .collect();
        let comb_text = |lc: &LinComb| {
            if lc.0.is_empty() {
                return "0".to_string();
            }
            let mut p = Poly::zero();
            for (c, n) in &lc.0 {
                let idx = names.iter().position(|m| m == n).unwrap();
                p = &p + &Poly::var(idx).scale(c);
            }
            let refs: Vec<&str> = names.iter().map(String::as_str).collect();
            p.to_string_with(&refs)
        };
        let bracket = self
            .table
            .iter()
            .map(|r| RawBracket {
                left: r.left.clone(),
                right: r.right.clone(),
                equals: comb_text(&r.equals),
            })
            .collect();
        let forms_text = |forms: &[OneForm]| {
            forms
                .iter()
                .map(|f| format_field(&PolyVectorField::new(f.coefficients().to_vec()), &self.vars))
                .collect::<Vec<_>>()
        };
        let norm = self.norm.as_ref().map(|n| match n {
            NormSpec::V(v) => RawNorm {
                repr: "V".into(),
                vertices: v
                    .generators()
                    .iter()
                    .map(|g| format!("[{}]", format_field(g, &self.vars)))
                    .collect(),
                constraints: Vec::new(),
                bounds: Vec::new(),
            },
            NormSpec::H(h) => RawNorm {
                repr: "H".into(),
                vertices: Vec::new(),
                constraints: forms_text(h.constraint_forms()),
                bounds: forms_text(h.bounding_forms()),
            },
        });
        let chattering = self.chattering.as_ref().map(|c| RawChatter {
            generators: c
                .generators
                .iter()
                .map(|g| format!("[{}]", format_field(g, &self.vars)))
                .collect(),
            edge: [c.edge.0, c.edge.1],
        });
        let raw = RawSystem {
            name: self.name.clone(),
            vars: self.vars.clone(),
            field: fields,
            bracket,
            norm,
            chattering,
        };
        toml::to_string(&raw).expect("system serializes")
    }

    /// Parses the TOML system-file format.
    pub fn from_toml(src: &str) -> Result<Self> {
        let raw: RawSystem = toml::from_str(src).map_err(|e| Error::Parse(e.to_string()))?;
        let mut system = FieldSystem {
            name: raw.name,
            vars: raw.vars,
            fields: Vec::new(),
            table: Vec::new(),
            norm: None,
            chattering: None,
        };
        for f in raw.field {
            let field = parse_field(&f.components, &system.vars)?;
            system.fields.push((f.name, field));
        }
        let names = system.field_names();
        for b in raw.bracket {
            system.field(&b.left)?;
            system.field(&b.right)?;
            system.table.push(BracketRelation {
                left: b.left,
                right: b.right,
                equals: LinComb::parse(&b.equals, &names)?,
            });
        }
        if let Some(n) = raw.norm {
            system.norm = Some(match n.repr.as_str() {
                "V" | "v" => {
                    let gens = n
                        .vertices
                        .iter()
                        .map(|v| system.vector_expr(v))
                        .collect::<Result<Vec<_>>>()?;
                    NormSpec::V(VNorm::new(gens)?)
                }
                "H" | "h" => {
                    let parse_forms = |list: &[String]| {
                        list.iter()
                            .map(|s| {
                                parse_field(s, &system.vars)
                                    .map(|f| OneForm::new(f.components().to_vec()))
                            })
                            .collect::<Result<Vec<_>>>()
                    };
                    NormSpec::H(HNorm::new(
                        parse_forms(&n.constraints)?,
                        parse_forms(&n.bounds)?,
                    )?)
                }
                other => {
                    return Err(Error::Parse(format!(
                        "unknown norm representation \"{other}\" (expected V or H)"
                    )))
                }
            });
        }
        if let Some(c) = raw.chattering {
            let generators = c
                .generators
                .iter()
                .map(|v| system.vector_expr(v))
                .collect::<Result<Vec<_>>>()?;
            let edge = (c.edge[0], c.edge[1]);
            if edge.0 >= generators.len() || edge.1 >= generators.len() {
                return Err(Error::InvalidInput("edge index out of range".into()));
            }
            system.chattering = Some(ChatterSpec { generators, edge });
        }
        Ok(system)
    }

    /// A vertex expression: either a bracketed component list `[a, b, ...]`
    /// or a linear combination of named fields.
    fn vector_expr(&self, src: &str) -> Result<PolyVectorField> {
        let t = src.trim();
        if let Some(inner) = t.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            parse_field(inner, &self.vars)
        } else {
            LinComb::parse(t, &self.field_names())?.evaluate(self)
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct RawField {
    name: String,
    components: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct RawBracket {
    left: String,
    right: String,
    equals: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct RawNorm {
    repr: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    vertices: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    constraints: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    bounds: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct RawChatter {
    generators: Vec<String>,
    edge: [usize; 2],
}

#[derive(Debug, Serialize, Deserialize)]
struct RawSystem {
    name: String,
    vars: Vec<String>,
    #[serde(default)]
    field: Vec<RawField>,
    #[serde(default)]
    bracket: Vec<RawBracket>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    norm: Option<RawNorm>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    chattering: Option<RawChatter>,
}

fn names(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("{prefix}{i}")).collect()
}

fn comb(terms: &[(i64, &str)]) -> LinComb {
    LinComb(
        terms
            .iter()
            .map(|(c, n)| (BigRational::from_integer((*c).into()), n.to_string()))
            .collect(),
    )
}

/// Full table for six fields: the listed nonzero brackets, every other pair zero.
fn full_table(prefix: &str, nonzero: &[(usize, usize, i64, usize)]) -> Vec<BracketRelation> {
    let mut out = Vec::new();
    for i in 1..=6 {
        for j in (i + 1)..=6 {
            let equals = nonzero
                .iter()
                .find(|(a, b, _, _)| *a == i && *b == j)
                .map(|(_, _, c, k)| comb(&[(*c, &format!("{prefix}{k}"))]))
                .unwrap_or_else(|| LinComb(Vec::new()));
            out.push(BracketRelation {
                left: format!("{prefix}{i}"),
                right: format!("{prefix}{j}"),
                equals,
            });
        }
    }
    out
}

const TABLE: [(usize, usize, i64, usize); 5] =
    [(1, 2, 1, 3), (1, 3, 1, 4), (1, 4, 1, 5), (2, 5, 1, 6), (3, 4, -1, 6)];

fn pm_sums(a: &PolyVectorField, b: &PolyVectorField) -> Vec<PolyVectorField> {
    vec![a + b, a - b, &(-a) + b, &(-a) - b]
}

/// `builtin:r4`: the sub-Finsler structure with unit ball `conv(+-f1 +- f2)`.
pub fn builtin_r4() -> FieldSystem {
    let f = r4_fields();
    let generators = pm_sums(&f[0], &f[1]);
    FieldSystem {
        name: "r4".into(),
        vars: ["x", "y", "z", "w"].iter().map(|s| s.to_string()).collect(),
        fields: names("f", 6).into_iter().zip(f).collect(),
        table: full_table("f", &TABLE),
        norm: Some(NormSpec::V(VNorm::new(generators.clone()).expect("valid ball"))),
        chattering: Some(ChatterSpec {
            generators,
            edge: (0, 1),
        }),
    }
}

/// `builtin:carnot`: the frame `g1..g6` with the 12-vertex Finsler ball.
pub fn builtin_carnot() -> FieldSystem {
    let g = carnot_fields();
    let mut vertices = pm_sums(&g[0], &g[1]);
    for gi in &g[2..] {
        vertices.push(gi.clone());
        vertices.push(-gi);
    }
    FieldSystem {
        name: "carnot".into(),
        vars: names("x", 6),
        fields: names("g", 6).into_iter().zip(g.clone()).collect(),
        table: full_table("g", &TABLE),
        norm: Some(NormSpec::V(VNorm::new(vertices).expect("valid ball"))),
        chattering: Some(ChatterSpec {
            generators: pm_sums(&g[0], &g[1]),
            edge: (0, 1),
        }),
    }
}

/// `builtin:demo9`: the nine-dimensional positive case for the chattering checker.
pub fn builtin_demo9() -> FieldSystem {
    let (f1, f2) = demo9_fields();
    let generators = vec![f1.clone(), f2.clone(), -&f1, -&f2];
    FieldSystem {
        name: "demo9".into(),
        vars: names("x", 9),
        fields: vec![("f1".into(), f1), ("f2".into(), f2)],
        table: Vec::new(),
        norm: Some(NormSpec::V(VNorm::new(generators.clone()).expect("valid ball"))),
        chattering: Some(ChatterSpec {
            generators,
            edge: (0, 1),
        }),
    }
}

/// Resolves `builtin:<name>` or reads a system file from disk.
pub fn load_system(spec: &str) -> Result<FieldSystem> {
    match spec {
        "builtin:r4" => Ok(builtin_r4()),
        "builtin:carnot" => Ok(builtin_carnot()),
        "builtin:demo9" => Ok(builtin_demo9()),
        s if s.starts_with("builtin:") => Err(Error::InvalidInput(format!(
            "unknown built-in system \"{s}\" (expected builtin:r4, builtin:carnot or builtin:demo9)"
        ))),
        path => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Parse(format!("cannot read {path}: {e}")))?;
            FieldSystem::from_toml(&text)
        }
    }
}

/// The dual description of the r4 ball: `zeta1 = dx - y dw`,
/// `zeta2 = dz - x^2/2 dw`, bounds `+-dy`, `+-dw`.
pub fn r4_dual_norm() -> HNorm {
    let x = Poly::var(0);
    let y = Poly::var(1);
    let one = Poly::from_int(1);
    let zero = Poly::zero();
    let zeta1 = OneForm::new(vec![one.clone(), zero.clone(), zero.clone(), -&y]);
    let zeta2 = OneForm::new(vec![
        zero.clone(),
        zero.clone(),
        one.clone(),
        -&x.pow(2).scale(&rat(1, 2)),
    ]);
    let coord = |i: usize, s: i64| {
        let mut c = vec![Poly::zero(); 4];
        c[i] = Poly::from_int(s);
        OneForm::new(c)
    };
    HNorm::new(
        vec![zeta1, zeta2],
        vec![coord(1, 1), coord(1, -1), coord(3, 1), coord(3, -1)],
    )
    .expect("valid forms")
}

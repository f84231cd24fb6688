//! Implicit surfaces from awkward equations: an expression language,
//! constituent-function builders, lattice sampling, marching cubes and
//! parameter-sensitivity metrics.
//!
//! ```
//! use implicitforge::expr::{parse, ParamSet};
//! use implicitforge::field::{sample_field, GridSpec};
//! use implicitforge::mesh::marching_cubes;
//!
//! let e = parse("x^2 + y^2 + z^2 - 1").unwrap();
//! let field = sample_field(&e, &GridSpec::cube(1.5, 12).unwrap(), &ParamSet::new()).unwrap();
//! assert!(marching_cubes(&field, 0.0).is_watertight());
//! ```

pub mod cli;
pub mod constituents;
pub mod expr;
pub mod family;
pub mod field;
pub mod mesh;
pub mod sensitivity;

// Every Rust block in the guide runs as a doctest, one module per chapter so
// a failure points at its chapter.
macro_rules! book_chapters {
    ($($name:ident => $file:literal),* $(,)?) => {
        $(
            #[cfg(doctest)]
            #[doc = include_str!(concat!("../../../book/src/", $file))]
            mod $name {}
        )*
    };
}

book_chapters! {
    book_introduction => "introduction.md",
    book_expressions => "expressions.md",
    book_constituents => "constituents.md",
    book_families => "families.md",
    book_sampling => "sampling.md",
    book_meshing => "meshing.md",
    book_sensitivity => "sensitivity.md",
    book_cli => "cli.md",
}

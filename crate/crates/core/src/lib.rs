pub mod analysis;
pub mod compiler;
pub mod encoding;
pub mod expression;
pub mod problem;
pub mod problem_file;
pub mod solvers;

/// Guide chapters, compiled as doc-tests so their examples stay current.
#[cfg(doctest)]
pub mod guide {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub mod chapter1 {}
    #[doc = include_str!("../../../book/src/expressions.md")]
    pub mod chapter2 {}
    #[doc = include_str!("../../../book/src/problems.md")]
    pub mod chapter3 {}
    #[doc = include_str!("../../../book/src/penalties.md")]
    pub mod chapter4 {}
    #[doc = include_str!("../../../book/src/quadratization.md")]
    pub mod chapter5 {}
    #[doc = include_str!("../../../book/src/solvers.md")]
    pub mod chapter6 {}
    #[doc = include_str!("../../../book/src/analysis.md")]
    pub mod chapter7 {}
    #[doc = include_str!("../../../book/src/cli.md")]
    pub mod chapter8 {}
    #[doc = include_str!("../../../README.md")]
    pub mod readme {}
}

//! Benchmark programs and technology files shipped with the toolchain.

/// One benchmark kernel, hand-written for ART-9 and as RV-32I source for
/// the transpiler.
#[derive(Clone, Copy, Debug)]
pub struct Fixture {
    pub name: &'static str,
    pub art9: &'static str,
    pub rv32i: &'static str,
}

pub const FIXTURES: [Fixture; 3] = [
    Fixture {
        name: "bubble_sort",
        art9: include_str!("../fixtures/bubble_sort.s"),
        rv32i: include_str!("../fixtures/bubble_sort.rv.s"),
    },
    Fixture {
        name: "gemm4",
        art9: include_str!("../fixtures/gemm4.s"),
        rv32i: include_str!("../fixtures/gemm4.rv.s"),
    },
    Fixture {
        name: "sobel8",
        art9: include_str!("../fixtures/sobel8.s"),
        rv32i: include_str!("../fixtures/sobel8.rv.s"),
    },
];

/// 32 nm CNTFET ternary gate library at 0.9 V.
pub const CNTFET_TECH: &str = include_str!("../fixtures/cntfet32-art9.tech");

/// Gate-count description of the ART-9 datapath.
pub const CNTFET_NETLIST: &str = include_str!("../fixtures/cntfet32-art9.struct");

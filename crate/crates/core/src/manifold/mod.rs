//! Section spaces on the projective line and the weak Morse reports built
//! from them.

mod report;
mod space;

pub use report::{
    default_sample_points, density_grid, section_grid, weak_morse_report, IntegratedRow,
    KernelReport, KernelRow, SAMPLE_RADII,
};
pub use space::{
    build_dual_space, build_section_space, cohomology_space, Extremal, SandwichReport, SectionSpace,
};

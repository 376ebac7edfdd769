//! Dirichlet Laplacian on the cube (0, L)³: levels, Fermi-sea densities,
//! shell counts and numerical checks of the box Lieb-Thirring inequalities.

mod density;
mod galerkin;
mod levels;
mod perturbation;

pub use density::{random_smooth_potential, rho0, rho0_grid, PotentialGrid, PotentialManifest};
pub use galerkin::{
    galerkin_spectrum, lt_gap_check, potential_lt_check, GalerkinSpectrum, LtGap, PotentialLtCheck,
};
pub use levels::{
    dirichlet_levels, half_lattice_ball_count, lowest_states, phi_sum, r_function, s_shifted,
    shell_count_f, states_up_to, sum_lowest, DirichletSpectrum, Level, LowestSum, ShellCount,
};
pub use perturbation::{
    random_admissible, thm_a1_check, FiniteRankPerturbation, PerturbationManifest, ThmA1Check,
};

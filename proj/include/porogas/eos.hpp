#pragma once

#include <cmath>

namespace porogas {

/// Universal gas constant, J/(mol K).
inline constexpr double kGasConstant = 8.314462618;

/// Peng-Robinson parameters of a single-component gas at fixed temperature.
///
/// `b` is the attraction coefficient b(T) (Pa m^6 mol^-2) and `beta` the
/// covolume (m^3/mol); admissible molar densities are 0 < c < 1/beta.
struct FluidEos {
    double R = kGasConstant;
    double T = 0.0;
    double Tc = 0.0;
    double Pc = 0.0;
    double omega = 0.0;
    double m = 0.0;
    double b = 0.0;
    double beta = 0.0;

    double RT() const { return R * T; }
    double max_density() const { return 1.0 / beta; }
};

/// Rock and transport parameters. `lame_mu` is the shear modulus and `visc`
/// the gas viscosity; both are written with the same Greek letter in much of
/// the literature and are kept separate here.
struct RockProps {
    double alpha = 1.0;        ///< Biot coefficient
    double N = 1.0;            ///< Biot modulus (Pa)
    double lame_mu = 1.0;      ///< shear Lame parameter (Pa)
    double lame_lambda = 1.0;  ///< dilatational Lame parameter (Pa)
    double phi_ref = 0.2;      ///< reference porosity
    double kappa0 = 1.0e-15;   ///< reference permeability (m^2)
    double visc = 1.0e-5;      ///< gas viscosity (Pa s)
};

/// Slope coefficient m(omega), using the high-acentric polynomial above 0.49.
double pr_slope(double omega);

/// Builds the fluid model from critical data. Throws InvalidParameter on
/// non-positive Tc, Pc, T or R.
FluidEos eos_from_critical(double Tc, double Pc, double omega, double T,
                           double R = kGasConstant);

void validate(const FluidEos& eos);
void validate(const RockProps& rock);

// Helmholtz free energy density split. All functions require 0 < c < 1/beta
// and throw DomainError otherwise.
double f_ideal(const FluidEos& eos, double c);
double f_repulsive(const FluidEos& eos, double c);
double f_attractive(const FluidEos& eos, double c);
double helmholtz_f(const FluidEos& eos, double c);

/// mu(c) = f'(c), closed form.
double chemical_potential(const FluidEos& eos, double c);

/// p(c) = cRT/(1 - beta c) - b c^2 / (1 + 2 beta c - beta^2 c^2).
double pressure_peng(const FluidEos& eos, double c);

/// Curvature of the convex (ideal + repulsive) part: RT / (c (1 - beta c)^2).
double stab_coeff(const FluidEos& eos, double c);

/// Curvature of the attractive part, -2 b (1 + beta c) / (1 + 2 beta c - beta^2 c^2)^2.
double attractive_curvature(const FluidEos& eos, double c);

/// Kozeny-Carman mobility kappa(phi)/visc using `rock.kappa0`.
double mobility(const RockProps& rock, double phi);

/// Same law with a cell-local reference permeability.
double mobility(const RockProps& rock, double phi, double kappa0);

}  // namespace porogas

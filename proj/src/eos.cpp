#include "porogas/eos.hpp"

#include "porogas/errors.hpp"

#include <cmath>
#include <string>

namespace porogas {

namespace {

constexpr double kSqrt2 = 1.41421356237309504880;

void require_admissible(const FluidEos& eos, double c) {
    if (!(c > 0.0) || !(eos.beta * c < 1.0) || !std::isfinite(c)) {
        throw DomainError("molar density " + std::to_string(c) +
                          " outside (0, 1/beta)");
    }
}

}  // namespace

double pr_slope(double omega) {
    if (omega <= 0.49) {
        return 0.37464 + 1.54226 * omega - 0.26992 * omega * omega;
    }
    return 0.379642 + 1.485030 * omega - 0.164423 * omega * omega +
           0.016666 * omega * omega * omega;
}

FluidEos eos_from_critical(double Tc, double Pc, double omega, double T, double R) {
    if (!(Tc > 0.0) || !(Pc > 0.0) || !(T > 0.0) || !(R > 0.0)) {
        throw InvalidParameter("eos_from_critical: Tc, Pc, T and R must be positive");
    }
    FluidEos eos;
    eos.R = R;
    eos.T = T;
    eos.Tc = Tc;
    eos.Pc = Pc;
    eos.omega = omega;
    eos.m = pr_slope(omega);
    const double alpha_t = 1.0 + eos.m * (1.0 - std::sqrt(T / Tc));
    eos.b = 0.45724 * R * R * Tc * Tc / Pc * alpha_t * alpha_t;
    eos.beta = 0.07780 * R * Tc / Pc;
    return eos;
}

void validate(const FluidEos& eos) {
    if (!(eos.beta > 0.0) || !(eos.b > 0.0) || !(eos.T > 0.0) || !(eos.R > 0.0)) {
        throw InvalidParameter("FluidEos: beta, b, T and R must be positive");
    }
}

void validate(const RockProps& rock) {
    if (!(rock.alpha > 0.0 && rock.alpha <= 1.0)) {
        throw InvalidParameter("RockProps: alpha must lie in (0, 1]");
    }
    if (!(rock.N > 0.0) || !(rock.lame_mu > 0.0) || !(rock.lame_lambda > 0.0)) {
        throw InvalidParameter("RockProps: N and the Lame parameters must be positive");
    }
    if (!(rock.phi_ref > 0.0 && rock.phi_ref < 1.0)) {
        throw InvalidParameter("RockProps: phi_ref must lie in (0, 1)");
    }
    if (!(rock.kappa0 > 0.0) || !(rock.visc > 0.0)) {
        throw InvalidParameter("RockProps: kappa0 and visc must be positive");
    }
}

double f_ideal(const FluidEos& eos, double c) {
    require_admissible(eos, c);
    return c * eos.RT() * std::log(c);
}

double f_repulsive(const FluidEos& eos, double c) {
    require_admissible(eos, c);
    return -c * eos.RT() * std::log1p(-eos.beta * c);
}

double f_attractive(const FluidEos& eos, double c) {
    require_admissible(eos, c);
    const double bc = eos.beta * c;
    const double ratio = (1.0 + (1.0 - kSqrt2) * bc) / (1.0 + (1.0 + kSqrt2) * bc);
    return eos.b * c / (2.0 * kSqrt2 * eos.beta) * std::log(ratio);
}

double helmholtz_f(const FluidEos& eos, double c) {
    return f_ideal(eos, c) + f_repulsive(eos, c) + f_attractive(eos, c);
}

double chemical_potential(const FluidEos& eos, double c) {
    require_admissible(eos, c);
    const double RT = eos.RT();
    const double bc = eos.beta * c;
    const double d1 = 1.0 + (1.0 - kSqrt2) * bc;
    const double d2 = 1.0 + (1.0 + kSqrt2) * bc;
    const double mu_ir = RT * (std::log(c) + 1.0) - RT * std::log1p(-bc) + RT * bc / (1.0 - bc);
    const double mu_att = eos.b / (2.0 * kSqrt2 * eos.beta) * std::log(d1 / d2) +
                          eos.b * c / (2.0 * kSqrt2) * ((1.0 - kSqrt2) / d1 - (1.0 + kSqrt2) / d2);
    return mu_ir + mu_att;
}

double pressure_peng(const FluidEos& eos, double c) {
    require_admissible(eos, c);
    const double bc = eos.beta * c;
    return c * eos.RT() / (1.0 - bc) - eos.b * c * c / (1.0 + 2.0 * bc - bc * bc);
}

double stab_coeff(const FluidEos& eos, double c) {
    require_admissible(eos, c);
    const double s = 1.0 - eos.beta * c;
    return eos.RT() / (c * s * s);
}

double attractive_curvature(const FluidEos& eos, double c) {
    require_admissible(eos, c);
    const double bc = eos.beta * c;
    const double d = 1.0 + 2.0 * bc - bc * bc;
    return -2.0 * eos.b * (1.0 + bc) / (d * d);
}

double mobility(const RockProps& rock, double phi) {
    return mobility(rock, phi, rock.kappa0);
}

double mobility(const RockProps& rock, double phi, double kappa0) {
    if (!(phi > 0.0 && phi < 1.0)) {
        throw DomainError("porosity " + std::to_string(phi) + " outside (0, 1)");
    }
    const double r = phi / rock.phi_ref;
    const double s = (1.0 - rock.phi_ref) / (1.0 - phi);
    return kappa0 / rock.visc * r * r * r * s * s;
}

}  // namespace porogas

#pragma once

#include <string>
#include <vector>

namespace gstrim {

// One-dimensional study of how the Gaussian width affects the position
// gradient when fitting a square wave under an L1 loss. The loss integrates
// |g - f| over the fixed window [mu0 - 3s, mu0 + 3s]; its mu-derivative has a
// closed form built from Gaussian density values at the wave edges (plus, for
// narrow widths, at the points where the density crosses 1).

// Square wave with period 2T: 1 on [2kT, (2k+1)T), 0 otherwise.
double square_wave(double x, double half_period);

// L1 distance between the normalized Gaussian density centered at mu and the
// square wave, integrated over [mu0 - 3s, mu0 + 3s]. Quadrature error < tol.
double l1_gauss_vs_square(double mu, double sigma, double half_period, double mu0 = 0.0,
                          double tol = 1e-10);

// Central difference of l1_gauss_vs_square at mu0 (step 1e-6 * T).
double l1_gradient_numeric(double sigma, double half_period, double mu0 = 0.0);

// Reference closed forms: 2(e^{-9/2}-1)/(sqrt(2pi) T/4) at sigma = T/4 and
// 2(e^{-2}-1)/(sqrt(2pi) T/2) at sigma = T/2; other widths fall back to the
// wave-edge enumeration over the 3-sigma window (no |.| sign corrections).
double l1_gradient_closed_form(double sigma, double half_period, double mu0 = 0.0);

// Exact derivative: wave-edge enumeration plus the density==1 crossing
// corrections. Matches l1_gradient_numeric to quadrature precision.
double l1_gradient_exact(double sigma, double half_period, double mu0 = 0.0);

struct GradientScaleReport {
    double half_period = 0.0;
    double closed_narrow = 0.0, closed_wide = 0.0;    // sigma = T/4, T/2 reference forms
    double numeric_narrow = 0.0, numeric_wide = 0.0;  // central differences of the integral
    double exact_narrow = 0.0, exact_wide = 0.0;      // crossing-aware closed form
    bool closed_matches_numeric_narrow = false;       // relative error < 1e-4
    bool closed_matches_numeric_wide = false;
    bool inequality_closed = false;   // |L'_{T/4}| > 2 |L'_{T/2}| on the reference forms
    bool inequality_numeric = false;  // same inequality on the numeric values

    std::string format() const;
};

// Computes reference and numeric gradients for sigma in {T/4, T/2}, checks
// them against each other and evaluates the narrow-beats-wide inequality.
GradientScaleReport verify_inequality(double half_period);

// L(mu) samples over [mu0 - T, mu0 + 2T] for plotting.
struct SweepSample {
    double mu, l1;
};
std::vector<SweepSample> sweep_l1(double sigma, double half_period, double mu0 = 0.0,
                                  int samples = 241);

}  // namespace gstrim

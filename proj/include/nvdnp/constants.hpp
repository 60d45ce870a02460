#pragma once

#include <cmath>

// Canonical internal units throughout the library:
//   length nm, time us, angular frequency rad/us, magnetic field tesla.
// Dipolar couplings and Larmor frequencies are then O(1)-O(1e2) numbers.

namespace nvdnp {

struct PhysicalConstants {
    // Electron gyromagnetic ratio, rad us^-1 T^-1 (CODATA 1.76085963023e11 rad s^-1 T^-1).
    double gamma_e = 1.76085963023e5;
    // 1H nuclear gyromagnetic ratio, rad us^-1 T^-1 (CODATA 2.6752218744e8 rad s^-1 T^-1).
    double gamma_n = 2.6752218744e2;
    // Dipolar prefactor b0 = (mu0/4pi) gamma_e gamma_n hbar, rad us^-1 nm^3.
    // SI value 4.9677e-22 rad s^-1 m^3, converted by 1e27 nm^3/m^3 * 1e-6 (s/us).
    double b0 = 1e-7 * 1.76085963023e11 * 2.6752218744e8 * 1.054571817e-34 * 1e21;
};

inline const PhysicalConstants& constants() {
    static const PhysicalConstants c;
    return c;
}

// omega_N = gamma_n |B|, rad/us for B in tesla.
inline double larmor_frequency(double b_tesla) {
    return constants().gamma_n * std::abs(b_tesla);
}

inline double gauss_to_tesla(double gauss) { return gauss * 1e-4; }
inline double tesla_to_gauss(double tesla) { return tesla * 1e4; }

constexpr double two_pi = 6.283185307179586476925286766559;

} // namespace nvdnp

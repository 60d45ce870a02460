#pragma once

#include <array>
#include <complex>

namespace nvdnp {

// Secular hyperfine field of the NV electron spin at a nucleus, expressed in
// the frame whose z axis is the NV quantization axis. Components in rad/us.
struct HyperfineVector {
    double ax = 0.0;
    double ay = 0.0;
    double az = 0.0;
};

// Positions closer than this to the NV indicate a broken configuration
// (diffusing nuclei never approach below z0); fail loudly instead of
// returning astronomically large couplings.
constexpr double hard_floor_nm = 0.1;

// Secular point-dipole field A(x) = (b0/r^3) (3 (n.rhat) rhat - n), with n the
// NV axis. The axis may be tilted by a polar angle from the surface normal;
// components are returned in the NV frame (z' = n).
class DipolarField {
public:
    explicit DipolarField(double tilt_deg = 0.0);

    HyperfineVector hyperfine(double x, double y, double z) const;

    // Flip-flop coupling g = (A_x + i A_y)/4.
    std::complex<double> coupling(double x, double y, double z) const {
        const HyperfineVector a = hyperfine(x, y, z);
        return {0.25 * a.ax, 0.25 * a.ay};
    }

    // Transverse pair (A_x, A_y) in one call; the statistics estimators want
    // both components without paying for az.
    void transverse(double x, double y, double z, double& ax, double& ay) const;

    double tilt_deg() const { return tilt_deg_; }

    // sup over the box [-L/2,L/2]^2 x [0,L] of |g| for an NV at depth z0:
    // (3 b0/4) max s w / (s^2+w^2)^{5/2} at s = w/2, w = z0.
    static double coupling_bound(double z0);

private:
    double tilt_deg_;
    bool tilted_;
    // NV-frame basis rows (x', y', z') in lab coordinates.
    std::array<double, 3> ex_, ey_, ez_;
};

inline HyperfineVector hyperfine(double x, double y, double z) {
    return DipolarField{}.hyperfine(x, y, z);
}

inline std::complex<double> coupling(double x, double y, double z) {
    return DipolarField{}.coupling(x, y, z);
}

} // namespace nvdnp

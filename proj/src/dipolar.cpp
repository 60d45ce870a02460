#include "nvdnp/dipolar.hpp"

#include <cmath>

#include "nvdnp/constants.hpp"
#include "nvdnp/errors.hpp"

namespace nvdnp {

DipolarField::DipolarField(double tilt_deg) : tilt_deg_(tilt_deg) {
    const double th = tilt_deg * two_pi / 360.0;
    tilted_ = std::abs(th) > 1e-15;
    // Tilt in the x-z plane: z' = (sin, 0, cos), x' = (cos, 0, -sin), y' = y.
    ex_ = {std::cos(th), 0.0, -std::sin(th)};
    ey_ = {0.0, 1.0, 0.0};
    ez_ = {std::sin(th), 0.0, std::cos(th)};
}

HyperfineVector DipolarField::hyperfine(double x, double y, double z) const {
    const double r2 = x * x + y * y + z * z;
    if (r2 < hard_floor_nm * hard_floor_nm)
        throw NumericalError("hyperfine: position within 0.1 nm of the NV (singularity floor)");
    const double r = std::sqrt(r2);
    const double b0_r3 = constants().b0 / (r2 * r);

    if (!tilted_) {
        // A = (b0/r^3)(3 cos(theta) rhat - zhat), cos(theta) = z/r.
        const double c3 = 3.0 * z / r2; // 3 cos(theta)/r
        return {b0_r3 * c3 * x, b0_r3 * c3 * y, b0_r3 * (c3 * z - 1.0)};
    }

    const double nz = (ez_[0] * x + ez_[1] * y + ez_[2] * z) / r; // n . rhat
    const double f = 3.0 * nz / r;
    // Lab-frame field, then projected onto the NV-frame axes.
    const double lx = b0_r3 * (f * x - ez_[0]);
    const double ly = b0_r3 * (f * y - ez_[1]);
    const double lz = b0_r3 * (f * z - ez_[2]);
    return {ex_[0] * lx + ex_[1] * ly + ex_[2] * lz,
            ey_[0] * lx + ey_[1] * ly + ey_[2] * lz,
            ez_[0] * lx + ez_[1] * ly + ez_[2] * lz};
}

void DipolarField::transverse(double x, double y, double z, double& ax, double& ay) const {
    if (!tilted_) {
        const double r2 = x * x + y * y + z * z;
        if (r2 < hard_floor_nm * hard_floor_nm)
            throw NumericalError("hyperfine: position within 0.1 nm of the NV (singularity floor)");
        const double r = std::sqrt(r2);
        const double c = 3.0 * constants().b0 * z / (r2 * r2 * r);
        ax = c * x;
        ay = c * y;
        return;
    }
    const HyperfineVector a = hyperfine(x, y, z);
    ax = a.ax;
    ay = a.ay;
}

double DipolarField::coupling_bound(double z0) {
    const double c_max = 3.0 / (2.0 * std::pow(1.25, 2.5)); // = 3/(2 (5/4)^{5/2})
    return 0.25 * constants().b0 / (z0 * z0 * z0) * c_max;
}

} // namespace nvdnp

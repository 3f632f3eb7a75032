#pragma once

#include <Eigen/Dense>

namespace ballmatch {

struct EulerZyz {
    double alpha = 0.0;  // first rotation, about z
    double beta = 0.0;   // about y, in [0, pi]
    double gamma = 0.0;  // last rotation, about z
};

// Element of SO(3). Canonical storage is a unit quaternion; ZYZ Euler
// angles are a derived view used only where Wigner-D phases need them.
// All rotations are active: matrix() * x rotates the vector x.
class Rotation {
public:
    Rotation() = default;
    Rotation(double w, double x, double y, double z);

    static Rotation identity() { return {}; }
    static Rotation from_euler_zyz(double alpha, double beta, double gamma);
    static Rotation from_euler_zyz(const EulerZyz& e) { return from_euler_zyz(e.alpha, e.beta, e.gamma); }
    static Rotation from_axis_angle(const Eigen::Vector3d& axis, double angle_rad);
    static Rotation from_matrix(const Eigen::Matrix3d& m);

    double w() const { return m_w; }
    double x() const { return m_x; }
    double y() const { return m_y; }
    double z() const { return m_z; }

    Eigen::Matrix3d matrix() const;
    EulerZyz euler_zyz() const;
    Rotation inverse() const { return unchecked(m_w, -m_x, -m_y, -m_z); }

    // Composition: (a * b) applies b first, then a (matches matrix product).
    Rotation operator*(const Rotation& rhs) const;

    // Geodesic angle to another rotation, radians in [0, pi].
    double angle_to(const Rotation& other) const;
    double angle() const { return angle_to({}); }

private:
    static Rotation unchecked(double w, double x, double y, double z) {
        Rotation r;
        r.m_w = w; r.m_x = x; r.m_y = y; r.m_z = z;
        return r;
    }
    double m_w = 1.0, m_x = 0.0, m_y = 0.0, m_z = 0.0;
};

// Accuracy metric: angle of the relative rotation, in degrees [0, 180].
double geodesic_degrees(const Rotation& g1, const Rotation& g2);

}  // namespace ballmatch

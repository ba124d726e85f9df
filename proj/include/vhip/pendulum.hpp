#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <algorithm>
#include <array>
#include <cmath>
#include <initializer_list>
#include <stdexcept>
#include <vector>

namespace vhip {

using Vector2 = Eigen::Vector2d;
using Vector3 = Eigen::Vector3d;

inline constexpr double kGravity = 9.81;

inline const Vector3 kEz{0., 0., 1.};

inline Vector3 gravity_vector(double g = kGravity) { return {0., 0., -g}; }

/// Planar rectangular contact area. t, b span the plane, n is its normal.
struct ContactArea {
  Vector3 o{Vector3::Zero()};
  Vector3 t{Vector3::UnitX()};
  Vector3 b{Vector3::UnitY()};
  Vector3 n{Vector3::UnitZ()};
  double X{0.11};
  double Y{0.05};

  static ContactArea flat(const Vector3& center, double X, double Y) {
    ContactArea c;
    c.o = center;
    c.X = X;
    c.Y = Y;
    return c;
  }

  /// Orientation from roll-pitch-yaw, R = Rz(yaw) Ry(pitch) Rx(roll).
  static ContactArea from_rpy(const Vector3& center, const Vector3& rpy, double X,
                              double Y) {
    const Eigen::Matrix3d R = (Eigen::AngleAxisd(rpy.z(), Vector3::UnitZ()) *
                               Eigen::AngleAxisd(rpy.y(), Vector3::UnitY()) *
                               Eigen::AngleAxisd(rpy.x(), Vector3::UnitX()))
                                  .toRotationMatrix();
    ContactArea c;
    c.o = center;
    c.t = R.col(0);
    c.b = R.col(1);
    c.n = R.col(2);
    c.X = X;
    c.Y = Y;
    return c;
  }

  /// Throws if the frame is not orthonormal, not upward facing or has bad extents.
  void validate(double tol = 1e-9) const {
    if (std::abs(t.norm() - 1.) > tol || std::abs(b.norm() - 1.) > tol ||
        std::abs(n.norm() - 1.) > tol)
      throw std::invalid_argument("contact frame vectors must be unit length");
    if (std::abs(t.dot(b)) > tol || std::abs(t.dot(n)) > tol || std::abs(b.dot(n)) > tol)
      throw std::invalid_argument("contact frame vectors must be orthogonal");
    if (n.z() <= 0.) throw std::invalid_argument("contact normal must point upward");
    if (!(X > 0.) || !(Y > 0.)) throw std::invalid_argument("half-extents must be positive");
  }

  /// Corner points in the contact plane.
  [[nodiscard]] std::array<Vector3, 4> vertices() const {
    return {o + X * t + Y * b, o - X * t + Y * b, o - X * t - Y * b, o + X * t - Y * b};
  }
};

struct PendulumState {
  Vector3 c{Vector3::Zero()};
  Vector3 cdot{Vector3::Zero()};
};

struct StiffnessBounds {
  double lambda_min{0.1 * kGravity};
  double lambda_max{2. * kGravity};

  static StiffnessBounds defaults(double g = kGravity) { return {0.1 * g, 2. * g}; }

  void validate() const {
    if (!(lambda_min > 0.) || !(lambda_min < lambda_max))
      throw std::invalid_argument("stiffness bounds must satisfy 0 < lambda_min < lambda_max");
  }
};

/// Horizontal-plane polygon H x <= p. Row count is arbitrary.
struct HalfspaceRep {
  Eigen::MatrixX2d H;
  Eigen::VectorXd p;

  [[nodiscard]] bool contains(const Vector2& x, double tol = 1e-10) const {
    return ((H * x - p).array() <= tol).all();
  }
  [[nodiscard]] double max_violation(const Vector2& x) const { return (H * x - p).maxCoeff(); }
};

inline Vector3 vhip_acceleration(const PendulumState& x, double lambda, const Vector3& r,
                                 double g = kGravity) {
  return lambda * (x.c - r) + gravity_vector(g);
}

inline void require_upward(const ContactArea& contact) {
  if (std::abs(contact.n.z()) < 1e-9) throw std::domain_error("degenerate contact: n.e_z ~ 0");
}

/// Height of q above the contact plane, measured along e_z.
inline double height_above(const ContactArea& contact, const Vector3& q) {
  require_upward(contact);
  return (q - contact.o).dot(contact.n) / contact.n.z();
}

/// Rate of change of height_above along velocity v.
inline double height_rate(const ContactArea& contact, const Vector3& v) {
  require_upward(contact);
  return v.dot(contact.n) / contact.n.z();
}

/// Vertical projection of a horizontal point onto the contact plane.
inline Vector3 project_to_plane(const ContactArea& contact, const Vector2& xy) {
  const Vector3 q{xy.x(), xy.y(), 0.};
  return q - height_above(contact, q) * kEz;
}

inline HalfspaceRep halfspace_rep(const ContactArea& contact) {
  require_upward(contact);
  const double nz = contact.n.z();
  const Vector3 bz = contact.b.cross(kEz);
  const Vector3 tz = contact.t.cross(kEz);
  HalfspaceRep hs;
  hs.H.resize(4, 2);
  hs.H << bz.x(), bz.y(), -bz.x(), -bz.y(), -tz.x(), -tz.y(), tz.x(), tz.y();
  const Vector2 o = contact.o.head<2>();
  hs.p.resize(4);
  hs.p << contact.X * nz, contact.X * nz, contact.Y * nz, contact.Y * nz;
  hs.p += hs.H * o;
  return hs;
}

/// Horizontal convex hull of the vertices of several contacts, counter-clockwise edges.
inline HalfspaceRep convex_hull_rep(std::initializer_list<const ContactArea*> contacts) {
  std::vector<Vector2> pts;
  for (const ContactArea* c : contacts)
    for (const Vector3& v : c->vertices()) pts.push_back(v.head<2>());
  std::sort(pts.begin(), pts.end(), [](const Vector2& a, const Vector2& b) {
    return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
  });
  auto cross = [](const Vector2& o, const Vector2& a, const Vector2& b) {
    return (a - o).x() * (b - o).y() - (a - o).y() * (b - o).x();
  };
  // Andrew's monotone chain.
  std::vector<Vector2> hull(2 * pts.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0.) --k;
    hull[k++] = pts[i];
  }
  for (std::size_t i = pts.size() - 1, lo = k + 1; i-- > 0;) {
    while (k >= lo && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0.) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  HalfspaceRep hs;
  hs.H.resize(static_cast<Eigen::Index>(hull.size()), 2);
  hs.p.resize(static_cast<Eigen::Index>(hull.size()));
  for (std::size_t i = 0; i < hull.size(); ++i) {
    const Vector2 e = hull[(i + 1) % hull.size()] - hull[i];
    const Vector2 nrm{e.y(), -e.x()};
    const auto r = static_cast<Eigen::Index>(i);
    hs.H.row(r) = nrm.transpose();
    hs.p(r) = nrm.dot(hull[i]);
  }
  return hs;
}

inline bool contains_point(const ContactArea& contact, const Vector3& r, double tol = 1e-9) {
  return std::abs((r - contact.o).dot(contact.n)) <= tol &&
         halfspace_rep(contact).contains(r.head<2>(), tol);
}

struct StaticEquilibrium {
  Vector3 c_f{0., 0., 0.8};
  ContactArea contact{};
  double h_f{0.8};

  /// Equilibrium at height h_f above the contact center.
  static StaticEquilibrium above(const ContactArea& contact, double h_f) {
    if (!(h_f > 0.)) throw std::invalid_argument("h_f must be positive");
    return {contact.o + h_f * kEz, contact, h_f};
  }

  /// Equilibrium at height h_f over a CoP chosen in the contact plane.
  static StaticEquilibrium over(const ContactArea& contact, const Vector2& r_xy, double h_f) {
    if (!(h_f > 0.)) throw std::invalid_argument("h_f must be positive");
    return {project_to_plane(contact, r_xy) + h_f * kEz, contact, h_f};
  }
};

struct EquilibriumInput {
  double lambda_f;
  Vector3 r_f;
};

inline EquilibriumInput equilibrium_input(const StaticEquilibrium& eq, double g = kGravity) {
  if (!(eq.h_f > 0.)) throw std::invalid_argument("h_f must be positive");
  const Vector3 r_f = eq.c_f - eq.h_f * kEz;
  if (std::abs(height_above(eq.contact, r_f)) > 1e-9)
    throw std::invalid_argument("h_f inconsistent with the contact plane");
  if (!halfspace_rep(eq.contact).contains(r_f.head<2>(), 1e-12))
    throw std::invalid_argument("equilibrium CoP outside the contact area");
  return {g / eq.h_f, r_f};
}

struct Dichotomy {
  Vector3 zeta;
  Vector3 xi;
};

inline Dichotomy dichotomy_components(const PendulumState& x, double gamma, double omega) {
  if (!(gamma > 0.) || !(omega > 0.)) throw std::invalid_argument("gamma, omega must be > 0");
  return {gamma * x.c - x.cdot, omega * x.c + x.cdot};
}

inline PendulumState from_dichotomy(const Dichotomy& d, double gamma, double omega) {
  const double s = gamma + omega;
  return {(d.zeta + d.xi) / s, (-omega * d.zeta + gamma * d.xi) / s};
}

inline double gram_determinant(const PendulumState& x, const Vector3& r, double g = kGravity) {
  return (x.c - r).cross(x.cdot).dot(gravity_vector(g));
}

/// One RK4 step of the VHIP dynamics; lambda_at and cop_at are evaluated at t, t+h/2, t+h.
template <class LambdaFn, class CopFn>
PendulumState rk4_step(const PendulumState& x, double t, double h, LambdaFn&& lambda_at,
                       CopFn&& cop_at, double g = kGravity) {
  auto f = [&](double tt, const Vector3& c, const Vector3& v) {
    return vhip_acceleration({c, v}, lambda_at(tt), cop_at(tt), g);
  };
  const Vector3 k1v = f(t, x.c, x.cdot);
  const Vector3 k1c = x.cdot;
  const Vector3 k2v = f(t + .5 * h, x.c + .5 * h * k1c, x.cdot + .5 * h * k1v);
  const Vector3 k2c = x.cdot + .5 * h * k1v;
  const Vector3 k3v = f(t + .5 * h, x.c + .5 * h * k2c, x.cdot + .5 * h * k2v);
  const Vector3 k3c = x.cdot + .5 * h * k2v;
  const Vector3 k4v = f(t + h, x.c + h * k3c, x.cdot + h * k3v);
  const Vector3 k4c = x.cdot + h * k3v;
  return {x.c + h / 6. * (k1c + 2. * k2c + 2. * k3c + k4c),
          x.cdot + h / 6. * (k1v + 2. * k2v + 2. * k3v + k4v)};
}

}  // namespace vhip

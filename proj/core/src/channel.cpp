#include "nfisac/channel.hpp"

#include <string>

namespace nfisac {

namespace {

void check_range(double range) {
  if (!(range > 0.0) || !std::isfinite(range)) {
    throw DomainError("range must be positive and finite, got " + std::to_string(range));
  }
}

void check_angle(double angle) {
  if (!(std::abs(angle) <= kPi / 2) || !std::isfinite(angle)) {
    throw DomainError("angle must lie in [-pi/2, pi/2], got " + std::to_string(angle));
  }
}

// Fresnel phase offset of antenna n (1-based) relative to the origin.
double fresnel_delta(double nd, double range, double angle) {
  const double c = std::cos(angle);
  return nd * std::sin(angle) - nd * nd * c * c / (2.0 * range);
}

}  // namespace

ArrayGeometry ArrayGeometry::from_apertures(int n_tx, int n_rx, double aperture_tx,
                                            double aperture_rx, double carrier_hz) {
  ArrayGeometry g;
  g.n_tx = n_tx;
  g.n_rx = n_rx;
  g.carrier_hz = carrier_hz;
  const double half_lambda = 0.5 * kSpeedOfLight / carrier_hz;
  g.spacing_tx = n_tx > 1 ? aperture_tx / (n_tx - 1) : half_lambda;
  g.spacing_rx = n_rx > 1 ? aperture_rx / (n_rx - 1) : half_lambda;
  g.validate();
  return g;
}

void ArrayGeometry::validate() const {
  if (n_tx < 1 || n_rx < 1) throw DomainError("antenna counts must be >= 1");
  if (!(spacing_tx > 0.0) || !(spacing_rx > 0.0)) throw DomainError("antenna spacing must be > 0");
  if (!(carrier_hz > 0.0) || !std::isfinite(carrier_hz)) throw DomainError("carrier must be > 0");
}

CMat ChannelSet::as_matrix() const {
  if (user_channels.empty()) return CMat();
  CMat h(user_channels.front().size(), users());
  for (int k = 0; k < users(); ++k) {
    require_dims(user_channels[k].size() == h.rows(), "user channels differ in length");
    h.col(k) = user_channels[k];
  }
  return h;
}

double rayleigh_distance(const ArrayGeometry& geometry, ArraySide side) {
  const double d = geometry.aperture(side);
  return 2.0 * d * d / geometry.wavelength();
}

CVec steering_vector(const ArrayGeometry& geometry, ArraySide side, const PolarPosition& pos,
                     FieldMode mode) {
  check_angle(pos.angle);
  if (mode == FieldMode::Near) check_range(pos.range);
  const int n = geometry.count(side);
  const double d = geometry.spacing(side);
  const double k0 = 2.0 * kPi / geometry.wavelength();
  CVec a(n);
  for (int i = 0; i < n; ++i) {
    const double nd = (i + 1) * d;
    const double delta = mode == FieldMode::Near ? fresnel_delta(nd, pos.range, pos.angle)
                                                 : nd * std::sin(pos.angle);
    a(i) = std::polar(1.0, k0 * delta);
  }
  return a;
}

SteeringDerivatives steering_derivatives(const ArrayGeometry& geometry, ArraySide side,
                                         const PolarPosition& pos) {
  const CVec a = steering_vector(geometry, side, pos, FieldMode::Near);
  const int n = geometry.count(side);
  const double d = geometry.spacing(side);
  const double k0 = 2.0 * kPi / geometry.wavelength();
  const double s = std::sin(pos.angle), c = std::cos(pos.angle), r = pos.range;
  SteeringDerivatives out{CVec(n), CVec(n)};
  for (int i = 0; i < n; ++i) {
    const double nd = (i + 1) * d;
    const double dd_angle = nd * c + nd * nd * s * c / r;
    const double dd_range = nd * nd * c * c / (2.0 * r * r);
    out.d_angle(i) = cplx(0.0, k0 * dd_angle) * a(i);
    out.d_range(i) = cplx(0.0, k0 * dd_range) * a(i);
  }
  return out;
}

cplx path_gain(double range, const ArrayGeometry& geometry) {
  check_range(range);
  const double lambda = geometry.wavelength();
  return std::polar(lambda / (4.0 * kPi * range), -2.0 * kPi * range / lambda);
}

cplx scatter_gain(const Scatterer& s, const ArrayGeometry& geometry) {
  check_range(s.position.range);
  check_range(s.backscatter_range);
  const double lambda = geometry.wavelength();
  const double mag = lambda / (4.0 * kPi * s.position.range) *
                     (lambda / (4.0 * kPi * s.backscatter_range));
  return std::polar(mag, -2.0 * kPi * (s.position.range + s.backscatter_range) / lambda);
}

CVec build_user_channel(const ArrayGeometry& geometry, const PolarPosition& user_pos,
                        const std::vector<Scatterer>& scatterers, FieldMode mode) {
  CVec h = path_gain(user_pos.range, geometry) *
           steering_vector(geometry, ArraySide::Tx, user_pos, mode);
  for (const Scatterer& s : scatterers) {
    h += scatter_gain(s, geometry) * steering_vector(geometry, ArraySide::Tx, s.position, mode);
  }
  return h;
}

}  // namespace nfisac

#pragma once

#include <vector>

#include "nfisac/common.hpp"

namespace nfisac {

enum class ArraySide { Tx, Rx };
enum class FieldMode { Near, Far };

struct ArrayGeometry {
  int n_tx = 16;
  int n_rx = 8;
  double spacing_tx = 0.5 / 15.0;
  double spacing_rx = 0.5 / 7.0;
  double carrier_hz = 30e9;

  // Spacing chosen so that (N - 1) d equals the given aperture. Single
  // antennas fall back to half a wavelength.
  static ArrayGeometry from_apertures(int n_tx, int n_rx, double aperture_tx, double aperture_rx,
                                      double carrier_hz);

  double wavelength() const { return kSpeedOfLight / carrier_hz; }
  int count(ArraySide side) const { return side == ArraySide::Tx ? n_tx : n_rx; }
  double spacing(ArraySide side) const { return side == ArraySide::Tx ? spacing_tx : spacing_rx; }
  double aperture(ArraySide side) const { return (count(side) - 1) * spacing(side); }
  void validate() const;
};

struct PolarPosition {
  double range = 1.0;
  double angle = 0.0;
};

struct Scatterer {
  PolarPosition position;
  double backscatter_range = 1.0;
};

struct ChannelSet {
  std::vector<CVec> user_channels;
  FieldMode field_mode = FieldMode::Near;

  int users() const { return static_cast<int>(user_channels.size()); }
  // Columns are h_k.
  CMat as_matrix() const;
};

double rayleigh_distance(const ArrayGeometry& geometry, ArraySide side);

CVec steering_vector(const ArrayGeometry& geometry, ArraySide side, const PolarPosition& pos,
                     FieldMode mode = FieldMode::Near);

struct SteeringDerivatives {
  CVec d_angle;
  CVec d_range;
};

SteeringDerivatives steering_derivatives(const ArrayGeometry& geometry, ArraySide side,
                                         const PolarPosition& pos);

// Free-space gain (lambda / 4 pi r) exp(-j 2 pi r / lambda).
cplx path_gain(double range, const ArrayGeometry& geometry);

// Two-hop scatterer gain: product of single-hop magnitudes, phase of the total path length.
cplx scatter_gain(const Scatterer& s, const ArrayGeometry& geometry);

CVec build_user_channel(const ArrayGeometry& geometry, const PolarPosition& user_pos,
                        const std::vector<Scatterer>& scatterers, FieldMode mode = FieldMode::Near);

}  // namespace nfisac

#pragma once

#include <Eigen/Dense>

#include "ssct/geometry.hpp"

namespace ssct {

// Free-space boundary operators as node-to-node matrices:
//   (S f)_i = int Phi(x_i - y) f(y) dsigma(y)
//   (N f)_i = int d_{nu_x} Phi(x_i - y) f(y) dsigma(y)   (direct value)
//   (D f)_i = int d_{nu_y} Phi(x_i - y) f(y) dsigma(y)   (direct value)
struct FreeLayerMatrices {
  Eigen::MatrixXcd S, N, D;
  bool spectral = false;  // rotated-pole rule on a lat-long sphere
};

enum LayerPart : int { kS = 1, kN = 2, kD = 4, kAll = 7 };

FreeLayerMatrices free_layer_matrices(const Hypersurface& s, double lambda, int parts = kAll);

// Rotated-pole spectral rule on a lat-long sphere (d = 3).
FreeLayerMatrices sphere_layer_matrices(const Hypersurface& s, double lambda, int parts = kAll);
// Kernel times weight off the diagonal; diagonal from the integral over a flat disk
// (or segment in d = 2) of the node's area. First order.
FreeLayerMatrices polar_layer_matrices(const Hypersurface& s, double lambda, int parts = kAll);

}  // namespace ssct

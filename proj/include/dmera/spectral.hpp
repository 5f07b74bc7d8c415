#pragma once

#include <limits>
#include <vector>

#include "dmera/channel.hpp"

namespace dmera {

struct Eigenpair {
  cplx lambda;
  double delta = 0.0;     // -log2|lambda|, +inf for lambda = 0
  double residual = 0.0;  // ||S v - lambda v|| / ||v||
  Vector vector;          // right eigenvector (column-stacked operator)
};

/// Eigenpairs sorted by descending |lambda|.
struct Spectrum {
  std::vector<Eigenpair> pairs;
};

struct FixedPoint {
  DensityMatrix state;
  long iterations = 0;
  double residual = 0.0;  // trace norm of Phi(rho) - rho
};

struct SpectralOptions {
  double residual_tol = 1e-8;
  int max_restarts = 500;
  unsigned seed = 12345;
  /// Restrict to operators even (+1) or odd (-1) under conjugation by Z on
  /// every qubit; 0 = no restriction. XX-convention channels preserve both sectors.
  int parity = 0;
  /// Krylov start vector; empty = seeded random.
  Vector start;
};

/// +1 / -1 when `v` (column-stacked operator on n qubits) lies in the even /
/// odd Z-parity sector, 0 when mixed (weights within 1e-8).
int operator_parity(const Vector& v, int n_qubits);

/// Top-k eigenpairs. Dense for small maps, matrix-free Krylov-Schur otherwise.
/// Throws ConvergenceError when a residual certificate fails.
Spectrum spectrum_topk(const Channel& channel, int k, const SpectralOptions& options = {});
Spectrum spectrum_topk(const Superoperator& s, int k, const SpectralOptions& options = {});

/// Power iteration from I/2^n until the trace-norm change drops below `tol`.
/// With `accelerate`, iteration starts from the Krylov leading eigenvector.
FixedPoint fixed_point(const Channel& channel, double tol = 1e-12, long max_iters = 100000, bool accelerate = false);
FixedPoint fixed_point(const Superoperator& s, double tol = 1e-12, long max_iters = 100000);

struct ScalingDimension {
  double delta;
  bool complex;  // |Im lambda| > 1e-8
};

std::vector<ScalingDimension> scaling_dimensions(const Spectrum& spectrum);

/// -log2|lambda|; +inf for lambda = 0.
double scaling_dimension(cplx lambda);

struct CftLevel {
  double delta;
  int multiplicity;
};

/// Levels of the Ising CFT (primaries 0, 1/8, 1 and descendants) until the
/// accumulated multiplicity reaches `count` (count <= 64).
std::vector<CftLevel> ising_cft_levels(int count);
/// The `count` smallest scaling dimensions with multiplicity.
std::vector<double> ising_cft_reference(int count);

double trace_norm(const Matrix& hermitian);

}  // namespace dmera

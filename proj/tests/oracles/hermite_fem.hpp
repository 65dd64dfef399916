#pragma once

// Cubic Hermite finite elements for the Laplacian on a finite metric graph.
// Vertex values are shared between incident edges; endpoint slopes belong to
// each edge, so the Kirchhoff condition is the natural one. Dirichlet
// vertices drop their value unknown. Eigenvalues are located through the
// inertia of K - sigma M (Sylvester), never through the secular equation.

#include "qgends/metric_graph.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <cmath>
#include <stdexcept>
#include <vector>

namespace oracle {

class HermiteFem {
 public:
  HermiteFem(const qgends::MetricGraph& g, const std::vector<bool>& dirichlet, double h) {
    std::vector<int> vertex_dof(g.vertex_count(), -1);
    int n = 0;
    for (std::size_t v = 0; v < g.vertex_count(); ++v)
      if (!dirichlet[v]) vertex_dof[v] = n++;
    std::vector<Eigen::Triplet<double>> k, m;
    for (const qgends::Edge& e : g.edges()) {
      const int cells = std::max(1, static_cast<int>(std::ceil(e.length / h)));
      const double he = e.length / cells;
      // Node j: value dof val[j], slope dof slope[j].
      std::vector<int> val(cells + 1), slope(cells + 1);
      for (int j = 0; j <= cells; ++j) {
        slope[j] = n++;
        if (j == 0) {
          val[j] = vertex_dof[e.tail];
        } else if (j == cells) {
          val[j] = vertex_dof[e.head];
        } else {
          val[j] = n++;
        }
      }
      const double ks = 1.0 / (30.0 * he), ms = he / 420.0;
      const double K[4][4] = {{36 * ks, 3 * he * ks, -36 * ks, 3 * he * ks},
                              {3 * he * ks, 4 * he * he * ks, -3 * he * ks, -he * he * ks},
                              {-36 * ks, -3 * he * ks, 36 * ks, -3 * he * ks},
                              {3 * he * ks, -he * he * ks, -3 * he * ks, 4 * he * he * ks}};
      const double M[4][4] = {{156 * ms, 22 * he * ms, 54 * ms, -13 * he * ms},
                              {22 * he * ms, 4 * he * he * ms, 13 * he * ms, -3 * he * he * ms},
                              {54 * ms, 13 * he * ms, 156 * ms, -22 * he * ms},
                              {-13 * he * ms, -3 * he * he * ms, -22 * he * ms, 4 * he * he * ms}};
      for (int c = 0; c < cells; ++c) {
        const int dof[4] = {val[c], slope[c], val[c + 1], slope[c + 1]};
        for (int a = 0; a < 4; ++a)
          for (int b = 0; b < 4; ++b) {
            if (dof[a] < 0 || dof[b] < 0) continue;
            k.emplace_back(dof[a], dof[b], K[a][b]);
            m.emplace_back(dof[a], dof[b], M[a][b]);
          }
      }
    }
    size_ = n;
    K_.resize(n, n);
    M_.resize(n, n);
    K_.setFromTriplets(k.begin(), k.end());
    M_.setFromTriplets(m.begin(), m.end());
  }

  /// Number of discrete eigenvalues strictly below sigma.
  std::size_t count_below(double sigma) const {
    Eigen::SparseMatrix<double> a = K_ - sigma * M_;
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(a);
    if (ldlt.info() != Eigen::Success) throw std::runtime_error("FEM factorisation failed");
    return static_cast<std::size_t>((ldlt.vectorD().array() < 0).count());
  }

  /// index-th eigenvalue (0-based) by bisection on the inertia count.
  double eigenvalue(std::size_t index, double lo, double hi, double rel_tol = 1e-13) const {
    while (count_below(hi) <= index) hi *= 2;
    while (hi - lo > rel_tol * std::max(1.0, hi)) {
      const double mid = 0.5 * (lo + hi);
      (count_below(mid) > index ? hi : lo) = mid;
    }
    return 0.5 * (lo + hi);
  }

  std::size_t size() const { return size_; }

 private:
  std::size_t size_ = 0;
  Eigen::SparseMatrix<double> K_, M_;
};

}  // namespace oracle

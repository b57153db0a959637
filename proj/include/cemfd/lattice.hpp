#pragma once

#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "cemfd/geometry.hpp"
#include "cemfd/types.hpp"

namespace cemfd {

// Natural corner α of a cell carrying part of electrode l, with Γ_lα > 0.
struct ElectrodeCell {
  int node = -1;
  double gamma = 0.0;
};

// Exterior approximation Q_h of the closed domain on the lattice x_α = h α,
// together with all index sets the discrete scheme sums over. Nodes are
// numbered densely in lexicographic order of their multi-index; every index
// set below is a sorted list of node ids.
class Lattice {
 public:
  static std::shared_ptr<const Lattice> build(const DomainSpec& spec,
                                              std::vector<Electrode> electrodes, double h);

  const DomainSpec& spec() const { return spec_; }
  const std::vector<Electrode>& electrodes() const { return electrodes_; }
  int dim() const { return n_; }
  double h() const { return h_; }

  std::size_t node_count() const { return nodes_.size(); }
  const MultiIndex& node(int id) const { return nodes_[static_cast<std::size_t>(id)]; }
  Point point(int id) const { return point(node(id)); }
  Point point(const MultiIndex& alpha) const;

  // -1 when α ∉ 𝒜(Q_h).
  int node_id(const MultiIndex& alpha) const;

  // Id of α + e_axis, or -1.
  int neighbor(int id, int axis) const {
    return plus_[static_cast<std::size_t>(id)][static_cast<std::size_t>(axis)];
  }

  // α ∈ 𝒜(Q_h⁺): α is the natural corner of a cell of Q_h.
  bool in_qplus(int id) const { return qplus_flag_[static_cast<std::size_t>(id)] != 0; }
  const std::vector<int>& qplus() const { return qplus_; }

  // 𝒜(Q_h⁽ⁱ⁾): α and α + e_i both in Q_h.
  const std::vector<int>& dir(int axis) const { return dir_[static_cast<std::size_t>(axis)]; }

  // 𝒜(Q_h⁽ⁱ'ʲ⁾) for i < j (3D): all four stencil nodes α, α+e_i, α+e_j, α+e_i+e_j present.
  const std::vector<int>& pair(int i, int j) const;

  // Number of α where the bare condition "α, α+e_i+e_j ∈ Q_h" holds but an
  // intermediate stencil node is missing; such α are excluded from pair().
  std::size_t pair_strengthened() const { return pair_strengthened_; }

  // 𝒜(S_h): lattice points on ∂Q_h.
  const std::vector<int>& boundary_nodes() const { return boundary_; }

  // 𝒜(Ŝ_h): natural corners of cells of Q_h that meet S.
  const std::vector<int>& boundary_hat() const { return boundary_hat_; }

  int electrode_count() const { return static_cast<int>(electrodes_.size()); }

  // 𝒜(Ê_lh) with the measures Γ_lα, zero-measure contacts pruned.
  const std::vector<ElectrodeCell>& electrode_cells(int l) const {
    return electrode_cells_[static_cast<std::size_t>(l)];
  }

  // Natural corner of a cell containing x. With require_qplus the cell must
  // belong to Q_h; otherwise any cell with all 2^n corners in Q_h is accepted
  // (cells of Q_h are preferred). Points on cell faces resolve to the cell
  // with the larger floor index first.
  std::optional<int> find_cell(const Point& x, bool require_qplus) const;

  Cell cell(int id) const { return {point(id), h_}; }

 private:
  Lattice() = default;

  std::size_t box_index(const MultiIndex& alpha) const;
  bool in_box(const MultiIndex& alpha) const;

  DomainSpec spec_;
  std::vector<Electrode> electrodes_;
  int n_ = 2;
  double h_ = 0.0;

  std::array<int, 3> kmin_{0, 0, 0};
  std::array<int, 3> extent_{1, 1, 1};
  std::vector<int> box_to_node_;
  std::vector<char> box_cell_;

  std::vector<MultiIndex> nodes_;
  std::vector<std::array<int, 3>> plus_;
  std::vector<char> qplus_flag_;
  std::vector<int> qplus_;
  std::array<std::vector<int>, 3> dir_;
  std::array<std::vector<int>, 3> pair_;
  std::size_t pair_strengthened_ = 0;
  std::vector<int> boundary_;
  std::vector<int> boundary_hat_;
  std::vector<std::vector<ElectrodeCell>> electrode_cells_;
};

// Real values on 𝒜(Q_h), indexed by node id.
class GridFunction {
 public:
  GridFunction() = default;
  explicit GridFunction(std::shared_ptr<const Lattice> lattice, double fill = 0.0);
  GridFunction(std::shared_ptr<const Lattice> lattice, std::vector<double> values);

  static GridFunction sample(std::shared_ptr<const Lattice> lattice,
                             const std::function<double(const Point&)>& f);

  const Lattice& lattice() const { return *lattice_; }
  const std::shared_ptr<const Lattice>& lattice_ptr() const { return lattice_; }
  bool empty() const { return lattice_ == nullptr; }

  std::size_t size() const { return values_.size(); }
  double operator[](int id) const { return values_[static_cast<std::size_t>(id)]; }
  double& operator[](int id) { return values_[static_cast<std::size_t>(id)]; }
  double at(const MultiIndex& alpha) const;

  std::span<const double> values() const { return values_; }
  std::vector<double>& data() { return values_; }

 private:
  std::shared_ptr<const Lattice> lattice_;
  std::vector<double> values_;
};

// u_{αx_i} = (u_{α+e_i} - u_α) / h. Throws IndexOutOfSet unless α ∈ 𝒜(Q_h⁽ⁱ⁾).
double forward_difference(const GridFunction& u, const MultiIndex& alpha, int axis);

// Mixed forward difference over a set of distinct axes (one difference per
// axis, divided by h^|axes|). Throws IndexOutOfSet if a stencil node is missing.
double mixed_difference(const GridFunction& u, const MultiIndex& alpha, std::span<const int> axes);

// Unchecked id-based variants used by the hot loops. The caller guarantees
// that the stencil exists.
double diff_at(const GridFunction& u, int id, int axis);
double mixed_at(const GridFunction& u, int id, std::span<const int> axes);

enum class NormKind { H1, TripleH1, TildeH1, Linf };

// Discrete norms on Q_h:
//   H1       (Σ hⁿ u² + Σ_i Σ_{Q_h⁽ⁱ⁾} hⁿ u_{x_i}²)^{1/2}
//   TripleH1 (Σ_i Σ_{Q_h⁽ⁱ⁾} hⁿ u_{x_i}² + Σ_l Σ_{Ê_lh} Γ_lα u²)^{1/2}
//   TildeH1  H1 plus mixed differences: σ_{x1x2} over Q_h⁺ in 2D; the three
//            pairs over Q_h⁽ⁱ'ʲ⁾ and σ_{x1x2x3} over Q_h⁺ in 3D
//   Linf     max |u_α|
double discrete_norm(const GridFunction& u, NormKind kind);

// Squared TildeH1 norm without the square root (used by admissibility checks).
double tilde_h1_norm_squared(const GridFunction& u);

// Text table "k1,k2[,k3],value", one node per line in ascending order.
void write_grid_function(std::ostream& os, const GridFunction& u);

// Parses the table written above. Every node of the lattice must appear once.
GridFunction read_grid_function(std::istream& is, std::shared_ptr<const Lattice> lattice);

}  // namespace cemfd

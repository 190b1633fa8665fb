#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <json.hpp>

namespace mintdro::sdp {

inline const double kSqrt2 = std::sqrt(2.0);

/// Number of packed entries of a d x d symmetric matrix.
constexpr int packed_size(int d) { return d * (d + 1) / 2; }

/// Position of entry (i, j) in the packed (upper triangle, column-major)
/// layout of a d x d symmetric matrix.
constexpr int packed_index(int i, int j) {
  if (i > j) std::swap(i, j);
  return j * (j + 1) / 2 + i;
}

/// Scaled symmetric vectorization: off-diagonal entries carry sqrt(2), so
/// <S, T>_F = pack(S) . pack(T).
inline Eigen::VectorXd pack(const Eigen::MatrixXd& s) {
  const int d = static_cast<int>(s.rows());
  Eigen::VectorXd out(packed_size(d));
  for (int j = 0; j < d; ++j)
    for (int i = 0; i <= j; ++i)
      out[packed_index(i, j)] = i == j ? s(i, i) : kSqrt2 * 0.5 * (s(i, j) + s(j, i));
  return out;
}

inline Eigen::MatrixXd unpack(const Eigen::Ref<const Eigen::VectorXd>& v, int d) {
  Eigen::MatrixXd out(d, d);
  for (int j = 0; j < d; ++j)
    for (int i = 0; i <= j; ++i) {
      const double x = v[packed_index(i, j)];
      if (i == j)
        out(i, i) = x;
      else
        out(i, j) = out(j, i) = x / kSqrt2;
    }
  return out;
}

enum class ConeKind { psd, nonneg, box, free };

inline const char* to_string(ConeKind k) {
  switch (k) {
    case ConeKind::psd: return "psd";
    case ConeKind::nonneg: return "nonneg";
    case ConeKind::box: return "box";
    case ConeKind::free: return "free";
  }
  return "?";
}

struct Block {
  ConeKind kind;
  int dim;     // matrix order for psd, vector length otherwise
  int offset;  // first packed variable
  int size;    // packed variable count
  double lo = 0.0, hi = 0.0;
  std::string name;
};

/// min c^T v  subject to  A v = b,  v in K_1 x ... x K_p.
///
/// Matrix blocks are stored packed; the helpers taking (block, i, j) let
/// callers write coefficients against plain matrix entries M_ij and
/// handle the sqrt(2) scaling themselves.
class ConicProgram {
 public:
  int add_psd(int d, std::string name = {}) {
    if (d < 1) throw std::invalid_argument("psd block dimension must be >= 1");
    return add_block({ConeKind::psd, d, 0, packed_size(d), 0.0, 0.0, std::move(name)});
  }
  int add_nonneg(int n, std::string name = {}) {
    return add_block({ConeKind::nonneg, n, 0, n, 0.0, 0.0, std::move(name)});
  }
  int add_box(int n, double lo, double hi, std::string name = {}) {
    if (!(lo <= hi)) throw std::invalid_argument("box bounds must satisfy lo <= hi");
    return add_block({ConeKind::box, n, 0, n, lo, hi, std::move(name)});
  }
  int add_free(int n, std::string name = {}) {
    return add_block({ConeKind::free, n, 0, n, 0.0, 0.0, std::move(name)});
  }

  const std::vector<Block>& blocks() const { return blocks_; }
  const Block& block(int b) const { return blocks_.at(b); }
  int num_vars() const { return num_vars_; }
  int num_constraints() const { return static_cast<int>(rhs_.size()); }

  /// Packed column of element i of a vector block.
  int var(int b, int i = 0) const {
    const Block& blk = blocks_.at(b);
    if (blk.kind == ConeKind::psd) throw std::logic_error("var(): block is a matrix");
    if (i < 0 || i >= blk.dim) throw std::out_of_range("var(): index out of range");
    return blk.offset + i;
  }

  /// Packed column holding matrix entry (i, j) and the factor mapping the
  /// packed value to the entry: M_ij = factor * v[col].
  std::pair<int, double> entry(int b, int i, int j) const {
    const Block& blk = blocks_.at(b);
    if (blk.kind != ConeKind::psd) throw std::logic_error("entry(): block is not a matrix");
    if (i < 0 || j < 0 || i >= blk.dim || j >= blk.dim)
      throw std::out_of_range("entry(): index out of range");
    return {blk.offset + packed_index(i, j), i == j ? 1.0 : 1.0 / kSqrt2};
  }

  int add_equality(double rhs) {
    rhs_.push_back(rhs);
    return static_cast<int>(rhs_.size()) - 1;
  }
  void add_to_rhs(int row, double value) { rhs_.at(row) += value; }

  /// Adds coef * v[col] to row.
  void add_coef(int row, int col, double coef) {
    if (coef != 0.0) triplets_.emplace_back(row, col, coef);
  }
  /// Adds coef * M_ij to row, where M is the matrix of psd block b.
  void add_entry_coef(int row, int b, int i, int j, double coef) {
    auto [col, f] = entry(b, i, j);
    add_coef(row, col, coef * f);
  }

  void add_objective(int col, double coef) {
    if (col < 0 || col >= num_vars_) throw std::out_of_range("add_objective: column out of range");
    objective_[col] += coef;
  }
  void add_objective_entry(int b, int i, int j, double coef) {
    auto [col, f] = entry(b, i, j);
    objective_[col] += coef * f;
  }
  /// Adds <C, M> for the psd block b.
  void add_objective_matrix(int b, const Eigen::MatrixXd& c) {
    const Block& blk = blocks_.at(b);
    const Eigen::VectorXd pc = pack(c);
    if (pc.size() != blk.size) throw std::invalid_argument("objective matrix has wrong size");
    objective_.segment(blk.offset, blk.size) += pc;
  }

  const Eigen::VectorXd& objective() const { return objective_; }
  const std::vector<double>& rhs() const { return rhs_; }
  const std::vector<Eigen::Triplet<double>>& triplets() const { return triplets_; }

  Eigen::SparseMatrix<double> constraint_matrix() const {
    Eigen::SparseMatrix<double> a(num_constraints(), num_vars_);
    a.setFromTriplets(triplets_.begin(), triplets_.end());
    return a;
  }

  /// JSON dump of the problem data for cross-checking with other solvers.
  nlohmann::json to_json() const {
    nlohmann::json j;
    j["format"] = "mintdro-conic-v1";
    j["packing"] = "upper-triangle column-major, off-diagonal scaled by sqrt(2)";
    auto& blocks = j["blocks"] = nlohmann::json::array();
    for (const auto& b : blocks_) {
      nlohmann::json jb{{"name", b.name}, {"cone", to_string(b.kind)},
                        {"dim", b.dim}, {"offset", b.offset}, {"size", b.size}};
      if (b.kind == ConeKind::box) {
        jb["lo"] = b.lo;
        jb["hi"] = b.hi;
      }
      blocks.push_back(jb);
    }
    auto& obj = j["objective"] = nlohmann::json::array();
    for (int k = 0; k < num_vars_; ++k)
      if (objective_[k] != 0.0) obj.push_back({k, objective_[k]});
    auto& cons = j["constraints"] = nlohmann::json::array();
    for (const auto& t : triplets_) cons.push_back({t.row(), t.col(), t.value()});
    j["rhs"] = rhs_;
    j["num_vars"] = num_vars_;
    return j;
  }

 private:
  int add_block(Block blk) {
    if (blk.dim < 1) throw std::invalid_argument("block dimension must be >= 1");
    blk.offset = num_vars_;
    num_vars_ += blk.size;
    Eigen::VectorXd grown = Eigen::VectorXd::Zero(num_vars_);
    grown.head(objective_.size()) = objective_;
    objective_ = std::move(grown);
    blocks_.push_back(std::move(blk));
    return static_cast<int>(blocks_.size()) - 1;
  }

  std::vector<Block> blocks_;
  int num_vars_ = 0;
  Eigen::VectorXd objective_;
  std::vector<double> rhs_;
  std::vector<Eigen::Triplet<double>> triplets_;
};

}  // namespace mintdro::sdp

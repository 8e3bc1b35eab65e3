#include "nfas/encoding.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/SVD>

#include "nfas/error.hpp"
#include "nfas/parallel.hpp"

namespace nfas {
namespace {

// Ridge solutions for every lambda from one SVD of the centered design.
struct RidgeSystem {
  Eigen::VectorXd x_mean;
  Eigen::MatrixXd u;
  Eigen::VectorXd s;
  Eigen::MatrixXd v;
  double tol = 0.0;

  explicit RidgeSystem(const Eigen::MatrixXd& x) : x_mean(x.colwise().mean().transpose()) {
    const Eigen::MatrixXd xc = x.rowwise() - x_mean.transpose();
    Eigen::BDCSVD<Eigen::MatrixXd> svd(xc, Eigen::ComputeThinU | Eigen::ComputeThinV);
    u = svd.matrixU();
    s = svd.singularValues();
    v = svd.matrixV();
    const double smax = s.size() > 0 ? s(0) : 0.0;
    tol = smax * static_cast<double>(std::max(x.rows(), x.cols())) *
          std::numeric_limits<double>::epsilon();
  }

  [[nodiscard]] Eigen::Index rank() const { return (s.array() > tol).count(); }

  [[nodiscard]] RidgeFit solve(const Eigen::VectorXd& y, double lambda) const {
    const double y_mean = y.mean();
    const Eigen::VectorXd uty = u.transpose() * (y.array() - y_mean).matrix();
    Eigen::VectorXd coef(s.size());
    for (Eigen::Index i = 0; i < s.size(); ++i) {
      coef(i) = s(i) > tol ? s(i) / (s(i) * s(i) + lambda) * uty(i) : 0.0;
    }
    RidgeFit fit;
    fit.weights = v * coef;
    fit.intercept = y_mean - x_mean.dot(fit.weights);
    fit.rank_deficient = lambda == 0.0 && rank() < x_mean.size();
    return fit;
  }
};

struct Standardizer {
  Eigen::RowVectorXd mean;
  Eigen::RowVectorXd scale;

  explicit Standardizer(const Eigen::MatrixXd& x) : mean(x.colwise().mean()) {
    const Eigen::MatrixXd xc = x.rowwise() - mean;
    scale = (xc.colwise().squaredNorm() / static_cast<double>(x.rows())).cwiseSqrt();
    for (Eigen::Index j = 0; j < scale.size(); ++j) {
      if (!(scale(j) > 0.0)) scale(j) = 1.0;
    }
  }

  [[nodiscard]] Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const {
    return (x.rowwise() - mean).array().rowwise() / scale.array();
  }
};

Eigen::MatrixXd take_rows(const Eigen::MatrixXd& m, const std::vector<Eigen::Index>& rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(rows[i]);
  return out;
}

Eigen::VectorXd take(const Eigen::VectorXd& v, const std::vector<Eigen::Index>& rows) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) out(static_cast<Eigen::Index>(i)) = v(rows[i]);
  return out;
}

bool is_constant(const Eigen::VectorXd& v) {
  return v.size() == 0 || (v.array() == v(0)).all();
}

// A training split with its standardized design, decomposed once.
struct Split {
  std::vector<Eigen::Index> train_rows;
  std::vector<Eigen::Index> test_rows;
  Standardizer standardizer;
  RidgeSystem system;
  Eigen::MatrixXd test_x;  // standardized with training statistics

  Split(const Eigen::MatrixXd& x, std::vector<Eigen::Index> train, std::vector<Eigen::Index> test)
      : train_rows(std::move(train)),
        test_rows(std::move(test)),
        standardizer(take_rows(x, train_rows)),
        system(standardizer.apply(take_rows(x, train_rows))),
        test_x(standardizer.apply(take_rows(x, test_rows))) {}

  [[nodiscard]] Eigen::VectorXd predict(const RidgeFit& fit) const {
    return (test_x * fit.weights).array() + fit.intercept;
  }
};

}  // namespace

std::vector<double> default_lambda_grid() {
  std::vector<double> grid;
  for (int e = -3; e <= 5; ++e) grid.push_back(std::pow(10.0, e));
  return grid;
}

RidgeFit fit_ridge(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double lambda) {
  if (x.rows() != y.size()) throw ValidationError("ridge: X and y differ in length");
  if (x.rows() < 2) throw ValidationError("ridge: at least 2 observations are required");
  if (!(lambda >= 0.0)) throw ValidationError("ridge: lambda must be non-negative");
  if (!x.allFinite() || !y.allFinite()) throw ValidationError("ridge: non-finite input");
  return RidgeSystem(x).solve(y, lambda);
}

double squared_correlation(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() != b.size()) throw ValidationError("correlation: length mismatch");
  if (a.size() < 2) return 0.0;
  const Eigen::ArrayXd ac = a.array() - a.mean();
  const Eigen::ArrayXd bc = b.array() - b.mean();
  const double saa = ac.square().sum();
  const double sbb = bc.square().sum();
  // Relative floor: a "constant" series that picked up rounding noise in
  // its mean subtraction must still count as constant.
  const double fa = a.cwiseAbs().maxCoeff() * 1e-14;
  const double fb = b.cwiseAbs().maxCoeff() * 1e-14;
  if (saa <= fa * fa * static_cast<double>(a.size()) || sbb <= fb * fb * static_cast<double>(b.size())) {
    return 0.0;
  }
  const double r = (ac * bc).sum() / std::sqrt(saa * sbb);
  return std::clamp(r * r, 0.0, 1.0);
}

struct CvPlan::Impl {
  Eigen::Index volumes = 0;
  CvConfig config;
  std::vector<int> assignment;
  std::vector<Split> outer;
  std::vector<std::vector<Split>> inner;  // per outer fold
};

CvPlan::CvPlan(const Eigen::MatrixXd& x, const CvConfig& config) : impl_(std::make_unique<Impl>()) {
  const Eigen::Index T = x.rows();
  const int k = config.folds;
  if (k < 2) throw ValidationError("cross-validation needs at least 2 folds");
  if (T < 2 * k) {
    throw ValidationError("cross-validation needs T >= 2k volumes (T=" + std::to_string(T) +
                          ", k=" + std::to_string(k) + ")");
  }
  if (config.lambda_grid.empty()) throw ValidationError("lambda grid is empty");
  for (double l : config.lambda_grid) {
    if (!(l >= 0.0) || !std::isfinite(l)) throw ValidationError("lambda grid values must be finite and >= 0");
  }
  if (!x.allFinite()) throw ValidationError("feature matrix has non-finite entries");

  impl_->volumes = T;
  impl_->config = config;
  impl_->assignment.resize(static_cast<std::size_t>(T));
  std::vector<std::vector<Eigen::Index>> blocks(static_cast<std::size_t>(k));
  for (int b = 0; b < k; ++b) {
    for (Eigen::Index t = T * b / k; t < T * (b + 1) / k; ++t) {
      impl_->assignment[static_cast<std::size_t>(t)] = b;
      blocks[static_cast<std::size_t>(b)].push_back(t);
    }
  }

  for (int j = 0; j < k; ++j) {
    std::vector<std::vector<Eigen::Index>> train_blocks;
    std::vector<Eigen::Index> train;
    for (int b = 0; b < k; ++b) {
      if (b == j) continue;
      train_blocks.push_back(blocks[static_cast<std::size_t>(b)]);
      train.insert(train.end(), blocks[static_cast<std::size_t>(b)].begin(),
                   blocks[static_cast<std::size_t>(b)].end());
    }
    impl_->outer.emplace_back(x, train, blocks[static_cast<std::size_t>(j)]);

    // With k = 2 there is a single training block; halve it for validation.
    if (train_blocks.size() == 1) {
      const auto& only = train_blocks.front();
      const auto half = static_cast<std::ptrdiff_t>(only.size() / 2);
      train_blocks = {std::vector<Eigen::Index>(only.begin(), only.begin() + half),
                      std::vector<Eigen::Index>(only.begin() + half, only.end())};
    }
    std::vector<Split> inner;
    for (std::size_t h = 0; h < train_blocks.size(); ++h) {
      std::vector<Eigen::Index> inner_train;
      for (std::size_t b = 0; b < train_blocks.size(); ++b) {
        if (b != h) inner_train.insert(inner_train.end(), train_blocks[b].begin(), train_blocks[b].end());
      }
      inner.emplace_back(x, std::move(inner_train), train_blocks[h]);
    }
    impl_->inner.push_back(std::move(inner));
  }
}

CvPlan::~CvPlan() = default;
CvPlan::CvPlan(CvPlan&&) noexcept = default;
CvPlan& CvPlan::operator=(CvPlan&&) noexcept = default;

Eigen::Index CvPlan::volumes() const { return impl_->volumes; }

CvResult CvPlan::evaluate(const Eigen::VectorXd& y) const {
  const Impl& p = *impl_;
  if (y.size() != p.volumes) {
    throw ValidationError("response has " + std::to_string(y.size()) + " volumes, features have " +
                          std::to_string(p.volumes));
  }
  if (!y.allFinite()) throw ValidationError("response has non-finite entries");

  CvResult result;
  result.fold_assignment = p.assignment;
  result.predictions = Eigen::VectorXd::Constant(p.volumes, std::numeric_limits<double>::quiet_NaN());
  const auto& grid = p.config.lambda_grid;

  for (std::size_t j = 0; j < p.outer.size(); ++j) {
    const Split& outer = p.outer[j];
    FoldFit fold;
    fold.fold = static_cast<int>(j);
    const Eigen::VectorXd y_train = take(y, outer.train_rows);
    if (is_constant(y_train)) {
      fold.skipped = true;
      result.warnings.push_back("fold " + std::to_string(j) + " skipped: constant training response");
      result.folds.push_back(std::move(fold));
      continue;
    }

    std::vector<double> sse(grid.size(), 0.0);
    for (const Split& in : p.inner[j]) {
      const Eigen::VectorXd yi = take(y, in.train_rows);
      const Eigen::VectorXd yh = take(y, in.test_rows);
      for (std::size_t g = 0; g < grid.size(); ++g) {
        sse[g] += (in.predict(in.system.solve(yi, grid[g])) - yh).squaredNorm();
      }
    }
    std::size_t best = 0;
    for (std::size_t g = 1; g < grid.size(); ++g) {
      if (sse[g] < sse[best]) best = g;
    }

    const RidgeFit fit = outer.system.solve(y_train, grid[best]);
    const Eigen::VectorXd pred = outer.predict(fit);
    for (std::size_t i = 0; i < outer.test_rows.size(); ++i) {
      result.predictions(outer.test_rows[i]) = pred(static_cast<Eigen::Index>(i));
    }
    fold.lambda = grid[best];
    fold.weights = fit.weights;
    fold.intercept = fit.intercept;
    result.folds.push_back(std::move(fold));
  }

  std::vector<Eigen::Index> kept;
  for (Eigen::Index t = 0; t < p.volumes; ++t) {
    if (!std::isnan(result.predictions(t))) kept.push_back(t);
  }
  if (kept.size() < 2) {
    result.degenerate = true;
    result.score = 0.0;
    result.warnings.push_back("all folds degenerate; score set to 0");
    return result;
  }
  const Eigen::VectorXd pk = take(result.predictions, kept);
  const Eigen::VectorXd yk = take(y, kept);
  result.score = squared_correlation(pk, yk);
  return result;
}

CvResult cv_alignment(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const CvConfig& config) {
  if (x.rows() != y.size()) throw ValidationError("features and response differ in length");
  return CvPlan(x, config).evaluate(y);
}

double cv_alignment_score(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                          const CvConfig& config) {
  return cv_alignment(x, y, config).score;
}

AlignmentVector alignment_vector(const FeatureSeries& features, const RoiTimeSeries& brain,
                                 const CvConfig& config, std::string model_id, Modality modality,
                                 int jobs) {
  if (!features.convolved) throw ValidationError("alignment requires HRF-convolved features");
  if (features.volumes() != brain.volumes()) {
    std::ostringstream msg;
    msg << "model '" << model_id << "': features have " << features.volumes()
        << " volumes but the brain has " << brain.volumes();
    throw ValidationError(msg.str());
  }

  const CvPlan plan(features.values, config);
  const auto R = static_cast<std::size_t>(brain.rois());
  std::vector<CvResult> per_roi(R);
  parallel_for(R, jobs, [&](std::size_t r) {
    per_roi[r] = plan.evaluate(brain.values.row(static_cast<Eigen::Index>(r)).transpose());
  });

  AlignmentVector out;
  out.model_id = std::move(model_id);
  out.modality = modality;
  out.scores.resize(static_cast<Eigen::Index>(R));
  for (std::size_t r = 0; r < R; ++r) {
    out.scores(static_cast<Eigen::Index>(r)) = per_roi[r].score;
    if (per_roi[r].degenerate) out.degenerate_rois.push_back(static_cast<Eigen::Index>(r));
    for (const auto& w : per_roi[r].warnings) {
      out.warnings.push_back("model '" + out.model_id + "' roi " + std::to_string(r) + ": " + w);
    }
  }
  return out;
}

}  // namespace nfas

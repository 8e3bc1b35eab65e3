#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/distributions/fisher_f.hpp>
#include <Eigen/QR>

#include "nfas/error.hpp"
#include "nfas/geometry_stats.hpp"

namespace nfas {
namespace {

struct Levels {
  std::vector<std::string> names;
  std::vector<int> ids;
};

Levels index_levels(std::span<const AnovaObservation> obs, bool first) {
  Levels l;
  for (const auto& o : obs) {
    const std::string& v = first ? o.factor_a : o.factor_b;
    auto it = std::find(l.names.begin(), l.names.end(), v);
    if (it == l.names.end()) {
      l.names.push_back(v);
      l.ids.push_back(static_cast<int>(l.names.size()) - 1);
    } else {
      l.ids.push_back(static_cast<int>(it - l.names.begin()));
    }
  }
  return l;
}

// Sum-to-zero coding: level j < k-1 gets a 1 in column j, the last level
// gets -1 in every column.
double effect_code(int level, int column, int levels) {
  if (level == column) return 1.0;
  if (level == levels - 1) return -1.0;
  return 0.0;
}

double residual_ss(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  const Eigen::VectorXd beta = qr.solve(y);
  return (y - x * beta).squaredNorm();
}

AnovaRow effect_row(std::string term, double ss, double df, double rss, double df_res) {
  AnovaRow r;
  r.term = std::move(term);
  r.sum_of_squares = std::max(0.0, ss);
  r.df = df;
  if (r.sum_of_squares == 0.0) {
    r.f = 0.0;
    r.p_value = 1.0;
  } else if (rss == 0.0) {
    r.f = std::numeric_limits<double>::infinity();
    r.p_value = 0.0;
  } else {
    r.f = (r.sum_of_squares / df) / (rss / df_res);
    r.p_value = f_distribution_sf(r.f, df, df_res);
  }
  return r;
}

}  // namespace

double f_distribution_sf(double f, double df1, double df2) {
  if (!(df1 > 0.0) || !(df2 > 0.0)) throw ValidationError("F distribution degrees of freedom must be positive");
  if (std::isnan(f)) return std::numeric_limits<double>::quiet_NaN();
  if (f <= 0.0) return 1.0;
  if (std::isinf(f)) return 0.0;
  const boost::math::fisher_f_distribution<double> dist(df1, df2);
  return boost::math::cdf(boost::math::complement(dist, f));
}

AnovaTable two_way_anova(std::span<const AnovaObservation> observations, SumOfSquares type,
                         std::string_view factor_a_name, std::string_view factor_b_name) {
  const auto n = static_cast<Eigen::Index>(observations.size());
  const Levels a = index_levels(observations, true);
  const Levels b = index_levels(observations, false);
  const int na = static_cast<int>(a.names.size());
  const int nb = static_cast<int>(b.names.size());
  if (na < 2 || nb < 2) throw ValidationError("two-way ANOVA needs at least 2 levels per factor");

  std::vector<int> cell_counts(static_cast<std::size_t>(na * nb), 0);
  for (Eigen::Index i = 0; i < n; ++i) {
    ++cell_counts[static_cast<std::size_t>(a.ids[static_cast<std::size_t>(i)] * nb +
                                           b.ids[static_cast<std::size_t>(i)])];
  }
  for (int i = 0; i < na; ++i) {
    for (int j = 0; j < nb; ++j) {
      if (cell_counts[static_cast<std::size_t>(i * nb + j)] == 0) {
        throw ValidationError("interaction is not estimable: no observations for cell (" +
                              a.names[static_cast<std::size_t>(i)] + ", " +
                              b.names[static_cast<std::size_t>(j)] + ")");
      }
    }
  }
  const int df_a = na - 1;
  const int df_b = nb - 1;
  const int df_ab = df_a * df_b;
  const Eigen::Index df_res = n - na * nb;
  if (df_res < 1) throw ValidationError("two-way ANOVA needs at least one residual degree of freedom");

  Eigen::VectorXd y(n);
  Eigen::MatrixXd xa(n, df_a);
  Eigen::MatrixXd xb(n, df_b);
  Eigen::MatrixXd xab(n, df_ab);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& o = observations[static_cast<std::size_t>(i)];
    if (!std::isfinite(o.value)) throw ValidationError("ANOVA observations must be finite");
    y(i) = o.value;
    const int la = a.ids[static_cast<std::size_t>(i)];
    const int lb = b.ids[static_cast<std::size_t>(i)];
    for (int c = 0; c < df_a; ++c) xa(i, c) = effect_code(la, c, na);
    for (int c = 0; c < df_b; ++c) xb(i, c) = effect_code(lb, c, nb);
    for (int ca = 0; ca < df_a; ++ca) {
      for (int cb = 0; cb < df_b; ++cb) xab(i, ca * df_b + cb) = xa(i, ca) * xb(i, cb);
    }
  }

  auto design = [&](bool with_a, bool with_b, bool with_ab) {
    const Eigen::Index cols = 1 + (with_a ? df_a : 0) + (with_b ? df_b : 0) + (with_ab ? df_ab : 0);
    Eigen::MatrixXd x(n, cols);
    x.col(0).setOnes();
    Eigen::Index at = 1;
    if (with_a) { x.middleCols(at, df_a) = xa; at += df_a; }
    if (with_b) { x.middleCols(at, df_b) = xb; at += df_b; }
    if (with_ab) x.middleCols(at, df_ab) = xab;
    return x;
  };

  const double rss_full = residual_ss(design(true, true, true), y);
  const double rss_ab = residual_ss(design(true, true, false), y);
  const double rss_a = residual_ss(design(true, false, false), y);
  double ss_a = 0.0;
  double ss_b = 0.0;
  if (type == SumOfSquares::TypeII) {
    const double rss_b = residual_ss(design(false, true, false), y);
    ss_a = rss_b - rss_ab;
    ss_b = rss_a - rss_ab;
  } else {
    const double rss_0 = residual_ss(design(false, false, false), y);
    ss_a = rss_0 - rss_a;
    ss_b = rss_a - rss_ab;
  }
  const double ss_ab = rss_ab - rss_full;
  const auto dres = static_cast<double>(df_res);

  AnovaTable table;
  table.type = type;
  table.observations = observations.size();
  table.rows.push_back(effect_row(std::string(factor_a_name), ss_a, df_a, rss_full, dres));
  table.rows.push_back(effect_row(std::string(factor_b_name), ss_b, df_b, rss_full, dres));
  table.rows.push_back(effect_row(std::string(factor_a_name) + ":" + std::string(factor_b_name),
                                  ss_ab, df_ab, rss_full, dres));
  AnovaRow residual;
  residual.term = "residual";
  residual.sum_of_squares = rss_full;
  residual.df = dres;
  residual.f = std::numeric_limits<double>::quiet_NaN();
  residual.p_value = std::numeric_limits<double>::quiet_NaN();
  table.rows.push_back(residual);
  return table;
}

}  // namespace nfas

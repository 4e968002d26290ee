// Copyright 2026 The ftmssm Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "ftmssm/metrics.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "ftmssm/error.hpp"
#include "ftmssm/rng.hpp"

namespace ftm {
namespace {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

void require_matrix(const Tensor& t, const char* what, std::size_t min_rows) {
  FTM_REQUIRE(t.rank() == 2, std::string(what) + ": expected a (samples, F) matrix");
  FTM_REQUIRE(t.dim(0) >= min_rows,
              std::string(what) + ": need at least " + std::to_string(min_rows) + " samples, got " +
                  std::to_string(t.dim(0)));
  FTM_REQUIRE(t.all_finite(), std::string(what) + ": features contain non-finite values");
}

Mat to_eigen(const Tensor& t) {
  Mat m(t.dim(0), t.dim(1));
  for (std::size_t i = 0; i < t.dim(0); ++i)
    for (std::size_t j = 0; j < t.dim(1); ++j) m(i, j) = t[i * t.dim(1) + j];
  return m;
}

double row_distance(const Tensor& a, std::size_t i, const Tensor& b, std::size_t j) {
  const std::size_t f = a.dim(1);
  double s = 0.0;
  for (std::size_t k = 0; k < f; ++k) {
    const double d = a[i * f + k] - b[j * f + k];
    s += d * d;
  }
  return std::sqrt(s);
}

void moments(const Tensor& t, Vec& mu, Mat& cov) {
  const Mat x = to_eigen(t);
  mu = x.colwise().mean().transpose();
  const Mat c = x.rowwise() - mu.transpose();
  cov = (c.transpose() * c) / static_cast<double>(x.rows());
}

Mat sym_sqrt(const Mat& m) {
  Eigen::SelfAdjointEigenSolver<Mat> es(m);
  const Vec ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace

double fid(const Tensor& a, const Tensor& b) {
  require_matrix(a, "fid", 2);
  require_matrix(b, "fid", 2);
  FTM_REQUIRE(a.dim(1) == b.dim(1), "fid: feature widths differ");
  Vec mu_a, mu_b;
  Mat sa, sb;
  moments(a, mu_a, sa);
  moments(b, mu_b, sb);
  const double min_a = Eigen::SelfAdjointEigenSolver<Mat>(sa, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
  const double min_b = Eigen::SelfAdjointEigenSolver<Mat>(sb, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
  if (min_a < 1e-10 || min_b < 1e-10) {
    const Mat ridge = 1e-6 * Mat::Identity(sa.rows(), sa.cols());
    sa += ridge;
    sb += ridge;
  }
  const Mat ra = sym_sqrt(sa);
  Mat inner = ra * sb * ra;
  inner = 0.5 * (inner + inner.transpose());
  const Vec ev = Eigen::SelfAdjointEigenSolver<Mat>(inner, Eigen::EigenvaluesOnly).eigenvalues();
  double tr_sqrt = 0.0;
  for (Eigen::Index i = 0; i < ev.size(); ++i) tr_sqrt += std::sqrt(std::max(ev(i), 0.0));
  const double value = (mu_a - mu_b).squaredNorm() + sa.trace() + sb.trace() - 2.0 * tr_sqrt;
  return std::max(value, 0.0);
}

RPrecision r_precision(const Tensor& motion, const Tensor& text, std::size_t pool, std::uint64_t seed) {
  FTM_REQUIRE(pool >= 2, "r_precision: pool size must be >= 2");
  require_matrix(motion, "r_precision", pool);
  require_matrix(text, "r_precision", pool);
  FTM_REQUIRE(motion.shape() == text.shape(), "r_precision: motion and text features must be paired");
  const std::size_t n = motion.dim(0);
  std::size_t hits[3] = {0, 0, 0};
  std::vector<std::size_t> cand;
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng(derive_seed(seed, i));
    cand.clear();
    while (cand.size() + 1 < pool) {
      const std::size_t j = rng.uniform_index(n);
      if (j == i || std::find(cand.begin(), cand.end(), j) != cand.end()) continue;
      cand.push_back(j);
    }
    const double d_true = row_distance(motion, i, text, i);
    std::size_t rank = 1;
    for (std::size_t j : cand) rank += row_distance(motion, i, text, j) < d_true ? 1 : 0;
    for (std::size_t k = 0; k < 3; ++k) hits[k] += rank <= k + 1 ? 1 : 0;
  }
  const double dn = static_cast<double>(n);
  return {hits[0] / dn, hits[1] / dn, hits[2] / dn};
}

double mm_dist(const Tensor& motion, const Tensor& text) {
  require_matrix(motion, "mm_dist", 1);
  require_matrix(text, "mm_dist", 1);
  FTM_REQUIRE(motion.dim(0) == text.dim(0), "mm_dist: sample counts differ (" + std::to_string(motion.dim(0)) +
                                                " vs " + std::to_string(text.dim(0)) + ")");
  FTM_REQUIRE(motion.dim(1) == text.dim(1), "mm_dist: feature widths differ");
  double s = 0.0;
  for (std::size_t i = 0; i < motion.dim(0); ++i) s += row_distance(motion, i, text, i);
  return s / static_cast<double>(motion.dim(0));
}

double diversity(const Tensor& feats, std::size_t subset, std::uint64_t seed) {
  FTM_REQUIRE(subset >= 1, "diversity: subset size must be >= 1");
  require_matrix(feats, "diversity", 2 * subset);
  Rng rng(derive_seed(seed, "diversity"));
  const auto perm = rng.permutation(feats.dim(0));
  double s = 0.0;
  for (std::size_t k = 0; k < subset; ++k) s += row_distance(feats, perm[k], feats, perm[subset + k]);
  return s / static_cast<double>(subset);
}

double mmodality(const std::vector<Tensor>& groups, std::size_t pairs_per_group, std::uint64_t seed) {
  FTM_REQUIRE(!groups.empty(), "mmodality: no groups");
  FTM_REQUIRE(pairs_per_group >= 1, "mmodality: pairs_per_group must be >= 1");
  double total = 0.0;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const Tensor& x = groups[g];
    require_matrix(x, "mmodality group", 2);
    Rng rng(derive_seed(seed, g));
    const std::size_t n = x.dim(0);
    double s = 0.0;
    for (std::size_t p = 0; p < pairs_per_group; ++p) {
      const std::size_t i = rng.uniform_index(n);
      const std::size_t j = (i + 1 + rng.uniform_index(n - 1)) % n;
      s += row_distance(x, i, x, j);
    }
    total += s / static_cast<double>(pairs_per_group);
  }
  return total / static_cast<double>(groups.size());
}

TextAligner TextAligner::fit(const Tensor& texts, const Tensor& features, double ridge) {
  require_matrix(texts, "TextAligner::fit", 1);
  require_matrix(features, "TextAligner::fit", 1);
  FTM_REQUIRE(texts.dim(0) == features.dim(0), "TextAligner::fit: texts and features must be paired");
  FTM_REQUIRE(ridge > 0.0, "TextAligner::fit: ridge must be positive");
  const Eigen::Index n = static_cast<Eigen::Index>(texts.dim(0));
  const Eigen::Index e = static_cast<Eigen::Index>(texts.dim(1));
  Mat x(n, e + 1);
  x.leftCols(e) = to_eigen(texts);
  x.col(e).setOnes();
  const Mat y = to_eigen(features);
  Mat gram = x.transpose() * x;
  gram.diagonal().array() += ridge;
  const Mat w = gram.ldlt().solve(x.transpose() * y);
  TextAligner out;
  out.weights_ = Tensor({static_cast<std::size_t>(e + 1), features.dim(1)});
  for (Eigen::Index i = 0; i < w.rows(); ++i)
    for (Eigen::Index j = 0; j < w.cols(); ++j) out.weights_[i * w.cols() + j] = w(i, j);
  return out;
}

Tensor TextAligner::map(const Tensor& texts) const {
  FTM_REQUIRE(weights_.rank() == 2, "TextAligner: not fitted");
  const std::size_t e = weights_.dim(0) - 1;
  const std::size_t f = weights_.dim(1);
  FTM_REQUIRE(texts.rank() == 2 && texts.dim(1) == e, "TextAligner::map: text width mismatch");
  Tensor out({texts.dim(0), f});
  for (std::size_t i = 0; i < texts.dim(0); ++i) {
    for (std::size_t j = 0; j < f; ++j) {
      double acc = weights_[e * f + j];
      for (std::size_t k = 0; k < e; ++k) acc += texts[i * e + k] * weights_[k * f + j];
      out[i * f + j] = acc;
    }
  }
  return out;
}

}  // namespace ftm

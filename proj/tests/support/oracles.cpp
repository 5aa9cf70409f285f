#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <torch/torch.h>

#include "swasat/rng.hpp"
#include "swasat/sefa.hpp"

namespace swasat::testkit {

Eigen::MatrixXd haar_analysis_matrix(std::int64_t height, std::int64_t width) {
  const auto bh = height / 2;
  const auto bw = width / 2;
  const auto band = bh * bw;
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(4 * band, height * width);
  // signs of (a, b, c, d) for each band
  const double sign[4][4] = {{1, 1, 1, 1}, {1, -1, 1, -1}, {1, 1, -1, -1}, {1, -1, -1, 1}};
  for (std::int64_t i = 0; i < bh; ++i) {
    for (std::int64_t j = 0; j < bw; ++j) {
      const std::int64_t px[4] = {(2 * i) * width + 2 * j, (2 * i) * width + 2 * j + 1, (2 * i + 1) * width + 2 * j,
                                  (2 * i + 1) * width + 2 * j + 1};
      for (int b = 0; b < 4; ++b) {
        for (int p = 0; p < 4; ++p) {
          m(b * band + i * bw + j, px[p]) = 0.5 * sign[b][p];
        }
      }
    }
  }
  return m;
}

Eigen::MatrixXd nearest_upsample_matrix(std::int64_t height, std::int64_t width) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(4 * height * width, height * width);
  for (std::int64_t y = 0; y < 2 * height; ++y) {
    for (std::int64_t x = 0; x < 2 * width; ++x) {
      m(y * 2 * width + x, (y / 2) * width + x / 2) = 1.0;
    }
  }
  return m;
}

SvdResult jacobi_svd(const Eigen::MatrixXd& a) {
  Eigen::MatrixXd u = a;
  const auto n = u.cols();
  Eigen::MatrixXd v = Eigen::MatrixXd::Identity(n, n);
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (Eigen::Index p = 0; p < n - 1; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const double alpha = u.col(p).squaredNorm();
        const double beta = u.col(q).squaredNorm();
        const double gamma = u.col(p).dot(u.col(q));
        if (std::abs(gamma) <= 1e-300) continue;
        off = std::max(off, std::abs(gamma) / std::sqrt(alpha * beta + 1e-300));
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = (zeta >= 0 ? 1.0 : -1.0) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (Eigen::Index r = 0; r < u.rows(); ++r) {
          const double up = u(r, p);
          const double uq = u(r, q);
          u(r, p) = c * up - s * uq;
          u(r, q) = s * up + c * uq;
        }
        for (Eigen::Index r = 0; r < n; ++r) {
          const double vp = v(r, p);
          const double vq = v(r, q);
          v(r, p) = c * vp - s * vq;
          v(r, q) = s * vp + c * vq;
        }
      }
    }
    if (off < 1e-15) break;
  }
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  Eigen::VectorXd norms(n);
  for (Eigen::Index i = 0; i < n; ++i) norms(i) = u.col(i).norm();
  std::sort(order.begin(), order.end(), [&](int x, int y) { return norms(x) > norms(y); });
  SvdResult out{Eigen::VectorXd(n), Eigen::MatrixXd(n, n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    out.singular_values(i) = norms(order[static_cast<std::size_t>(i)]);
    out.right_vectors.col(i) = v.col(order[static_cast<std::size_t>(i)]);
  }
  return out;
}

double subspace_gap(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  const Eigen::MatrixXd residual = b - a * (a.transpose() * b);
  return residual.norm();
}

std::vector<std::vector<int>> clusters(const Eigen::VectorXd& v, double rel) {
  std::vector<std::vector<int>> out;
  for (int i = 0; i < v.size(); ++i) {
    if (!out.empty() && std::abs(v(out.back().back()) - v(i)) <= rel * std::max(1.0, std::abs(v(i)))) {
      out.back().push_back(i);
    } else {
      out.push_back({i});
    }
  }
  return out;
}

GradCheck gradcheck(torch::nn::Module& module, const std::function<torch::Tensor()>& loss, std::int64_t probes,
                    std::uint64_t seed, double step, double floor) {
  auto params = module.named_parameters();
  for (auto& p : params) {
    p.value().mutable_grad() = torch::Tensor();
  }
  loss().backward();
  GradCheck out;
  rng::Stream stream(seed);
  torch::NoGradGuard no_grad;
  for (auto& p : params) {
    auto& value = p.value();
    if (!value.grad().defined()) {
      continue;
    }
    const auto analytic = value.grad().detach().reshape({-1}).clone();
    auto flat = value.view({-1});
    for (std::int64_t i = 0; i < probes; ++i) {
      const auto idx = static_cast<std::int64_t>(stream.uniform_index(static_cast<std::uint64_t>(flat.numel())));
      const double saved = flat[idx].item<double>();
      flat[idx].fill_(saved + step);
      const double up = loss().item<double>();
      flat[idx].fill_(saved - step);
      const double down = loss().item<double>();
      flat[idx].fill_(saved);
      const double numeric = (up - down) / (2.0 * step);
      const double a = analytic[idx].item<double>();
      const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), floor});
      out.max_rel_error = std::max(out.max_rel_error, rel);
      ++out.checked;
    }
  }
  return out;
}

Eigen::MatrixXd random_projection(std::uint64_t seed) {
  rng::Stream stream(seed);
  const auto rows = static_cast<Eigen::Index>(1 + stream.uniform_index(64));
  const auto cols = static_cast<Eigen::Index>(1 + stream.uniform_index(16));
  auto normal = [&] {
    const double u1 = std::max(stream.uniform01(), 1e-300);
    const double u2 = stream.uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  };
  Eigen::MatrixXd a(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) a(r, c) = normal();
  }
  if (seed % 4 == 3 && rows >= cols && cols >= 2) {
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
    const Eigen::MatrixXd u = qr.householderQ() * Eigen::MatrixXd::Identity(rows, cols);
    Eigen::MatrixXd g(cols, cols);
    for (Eigen::Index r = 0; r < cols; ++r) {
      for (Eigen::Index c = 0; c < cols; ++c) g(r, c) = normal();
    }
    Eigen::HouseholderQR<Eigen::MatrixXd> qv(g);
    const Eigen::MatrixXd v = qv.householderQ();
    Eigen::VectorXd s(cols);
    for (Eigen::Index i = 0; i < cols; ++i) s(i) = static_cast<double>(cols - i);
    s(1) = s(0);
    a = u * s.asDiagonal() * v.transpose();
  }
  return a;
}

SefaCheck check_factorization(const Eigen::MatrixXd& a) {
  const auto cols = a.cols();
  const auto set = sefa::factorize(a, cols);
  const auto oracle = jacobi_svd(a);
  const Eigen::VectorXd expected = oracle.singular_values.array().square();
  SefaCheck out;
  Eigen::VectorXd got(cols);
  for (Eigen::Index i = 0; i < cols; ++i) {
    got(i) = set.directions[static_cast<std::size_t>(i)].eigenvalue;
    const double err = std::abs(got(i) - expected(i)) / std::max(1.0, std::abs(expected(i)));
    out.eigenvalue_rel_error = std::max(out.eigenvalue_rel_error, err);
    if (i > 0 && got(i) > got(i - 1)) out.ordered = false;
    const auto& v = set.directions[static_cast<std::size_t>(i)].vector;
    for (Eigen::Index j = 0; j < v.size(); ++j) {
      if (std::abs(v(j)) > 1e-12) {
        if (v(j) < 0) out.signs = false;
        break;
      }
    }
  }
  const Eigen::MatrixXd basis = set.basis();
  out.orthonormality =
      (basis.transpose() * basis - Eigen::MatrixXd::Identity(cols, cols)).cwiseAbs().maxCoeff();
  for (const auto& group : clusters(expected, 1e-9)) {
    Eigen::MatrixXd mine(cols, static_cast<Eigen::Index>(group.size()));
    Eigen::MatrixXd theirs(cols, static_cast<Eigen::Index>(group.size()));
    for (std::size_t j = 0; j < group.size(); ++j) {
      mine.col(static_cast<Eigen::Index>(j)) = basis.col(group[j]);
      theirs.col(static_cast<Eigen::Index>(j)) = oracle.right_vectors.col(group[j]);
    }
    out.subspace_gap = std::max(out.subspace_gap, subspace_gap(theirs, mine));
  }
  return out;
}

}  // namespace swasat::testkit

#include "lcf/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>

namespace lcf {

namespace {
std::mutex g_gl_mutex;
std::map<int, GaussLegendre> g_gl_cache;

GaussLegendre compute_gauss_legendre(int n) {
  GaussLegendre rule;
  rule.nodes.resize(std::size_t(n));
  rule.weights.resize(std::size_t(n));
  const int half = (n + 1) / 2;
  for (int i = 0; i < half; ++i) {
    double x = std::cos(M_PI * (double(i) + 0.75) / (double(n) + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      // Recurrence for P_n(x) and P'_n(x).
      double p0 = 1.0, p1 = x;
      for (int j = 2; j <= n; ++j) {
        const double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / double(j);
        p0 = p1;
        p1 = p2;
      }
      dp = double(n) * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[std::size_t(i)] = -x;  // ascending order
    rule.weights[std::size_t(i)] = w;
    rule.nodes[std::size_t(n - 1 - i)] = x;
    rule.weights[std::size_t(n - 1 - i)] = w;
  }
  return rule;
}
}  // namespace

const GaussLegendre& gauss_legendre(int n) {
  std::lock_guard<std::mutex> lock(g_gl_mutex);
  auto it = g_gl_cache.find(n);
  if (it == g_gl_cache.end()) it = g_gl_cache.emplace(n, compute_gauss_legendre(n)).first;
  return it->second;
}

SphereRule sphere_rule(int theta_nodes, int phi_nodes) {
  if (phi_nodes % 2 != 0) ++phi_nodes;
  const GaussLegendre& gl = gauss_legendre(theta_nodes);
  SphereRule rule;
  rule.nodes.reserve(std::size_t(theta_nodes) * std::size_t(phi_nodes));
  constexpr double kPhiOffset = 0.31830988618379067;  // 1/pi
  const double dphi = 2.0 * M_PI / double(phi_nodes);
  for (int i = 0; i < theta_nodes; ++i) {
    const double mu = gl.nodes[std::size_t(i)];  // cos(theta)
    const double smu = std::sqrt(std::max(0.0, 1.0 - mu * mu));
    const double wmu = gl.weights[std::size_t(i)] * dphi;
    for (int j = 0; j < phi_nodes; ++j) {
      const double phi = dphi * (double(j) + kPhiOffset);
      rule.nodes.push_back({smu * std::cos(phi), smu * std::sin(phi), mu, wmu});
    }
  }
  return rule;
}

LightConeQuadrature LightConeQuadrature::refined() const {
  LightConeQuadrature q = *this;
  q.radial_nodes = radial_nodes + (radial_nodes + 1) / 2;
  q.theta_nodes = theta_nodes + (theta_nodes + 1) / 2;
  q.phi_nodes = phi_nodes + (phi_nodes + 1) / 2;
  if (q.phi_nodes % 2 != 0) ++q.phi_nodes;
  return q;
}

RadialRule radial_rule(int n, double cutoff) {
  const GaussLegendre& gl = gauss_legendre(n);
  const double tmax = cutoff / (1.0 + cutoff);
  RadialRule rule;
  rule.omega.resize(std::size_t(n));
  rule.weight.resize(std::size_t(n));
  for (int i = 0; i < n; ++i) {
    const double t = 0.5 * tmax * (gl.nodes[std::size_t(i)] + 1.0);
    const double wt = 0.5 * tmax * gl.weights[std::size_t(i)];
    const double om = t / (1.0 - t);
    rule.omega[std::size_t(i)] = om;
    rule.weight[std::size_t(i)] = wt / ((1.0 - t) * (1.0 - t));
  }
  return rule;
}

}  // namespace lcf

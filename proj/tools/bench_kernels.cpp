// Serial reference against optimized / parallel paths: timing and max deviation.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <vector>

#include "dockpilot/camera.hpp"
#include "dockpilot/kernels.hpp"
#include "dockpilot/net.hpp"
#include "dockpilot/util.hpp"

using namespace dockpilot;
using clock_type = std::chrono::steady_clock;

template <typename F>
double time_us(F&& f, int reps) {
  f();
  const auto t0 = clock_type::now();
  for (int i = 0; i < reps; ++i) f();
  return std::chrono::duration<double, std::micro>(clock_type::now() - t0).count() / reps;
}

double max_diff(const std::vector<float>& a, const std::vector<float>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(double(a[i]) - double(b[i])));
  return m;
}

void row(const char* name, double ref_us, double opt_us, double diff) {
  std::printf("%-28s ref %10.1f us  opt %10.1f us  speedup %5.2fx  max|diff| %.3g\n", name, ref_us, opt_us,
              ref_us / opt_us, diff);
}

int main() {
  const int threads = configure_threads();
  std::printf("threads %d\n", threads);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  auto fill = [&](std::vector<float>& v) {
    for (auto& x : v) x = u(rng);
  };

  const int layers[][3] = {{1, 8, 64}, {8, 16, 32}, {16, 32, 16}, {32, 64, 8}};
  for (const auto& l : layers) {
    const int ci = l[0], co = l[1], side = l[2], n = side * side;
    std::vector<float> in(ci * n), w(co * ci * 9), b(co), out_r(co * n), out_o(co * n), gout(co * n);
    std::vector<float> scratch(2 * kernels::conv3x3_scratch(ci, side));
    fill(in), fill(w), fill(b), fill(gout);
    const int reps = 20;
    const double tf_r = time_us([&] { kernels::reference::conv3x3_forward(in.data(), ci, side, w.data(), b.data(), co, out_r.data()); }, reps);
    const double tf_o = time_us([&] { kernels::conv3x3_forward(in.data(), ci, side, w.data(), b.data(), co, out_o.data(), scratch.data()); }, reps);
    char name[64];
    std::snprintf(name, sizeof name, "conv fwd %dx%d %d->%d", side, side, ci, co);
    row(name, tf_r, tf_o, max_diff(out_r, out_o));

    std::vector<float> gw_r(w.size()), gw_o(w.size()), gb_r(co), gb_o(co), gi_r(in.size()), gi_o(in.size());
    auto run_ref = [&] {
      std::fill(gw_r.begin(), gw_r.end(), 0.0f), std::fill(gb_r.begin(), gb_r.end(), 0.0f);
      std::fill(gi_r.begin(), gi_r.end(), 0.0f);
      kernels::reference::conv3x3_backward(in.data(), ci, side, w.data(), co, gout.data(), gw_r.data(), gb_r.data(), gi_r.data());
    };
    auto run_opt = [&] {
      std::fill(gw_o.begin(), gw_o.end(), 0.0f), std::fill(gb_o.begin(), gb_o.end(), 0.0f);
      std::fill(gi_o.begin(), gi_o.end(), 0.0f);
      kernels::conv3x3_backward(in.data(), ci, side, w.data(), co, gout.data(), gw_o.data(), gb_o.data(), gi_o.data(), scratch.data());
    };
    const double tb_r = time_us(run_ref, reps), tb_o = time_us(run_opt, reps);
    std::snprintf(name, sizeof name, "conv bwd %dx%d %d->%d", side, side, ci, co);
    row(name, tb_r, tb_o, std::max({max_diff(gw_r, gw_o), max_diff(gi_r, gi_o), max_diff(gb_r, gb_o)}));
  }

  // whole network, batch of 32
  NetworkConfig nc;
  Network<float> net(nc);
  net.initialize(3);
  const std::size_t batch = 32, px = std::size_t(nc.input_side) * nc.input_side;
  std::vector<float> images(batch * px), targets(batch * 4), out_r(batch * 4), out_o(batch * 4);
  std::uniform_real_distribution<float> u01(0.0f, 1.0f);
  for (auto& x : images) x = u01(rng);
  fill(targets);
  const double tr = time_us([&] { net.forward(images, batch, false, 0, out_r, Exec::serial_reference); }, 3);
  const double to = time_us([&] { net.forward(images, batch, false, 0, out_o, Exec::parallel); }, 3);
  row("network fwd batch 32", tr, to, max_diff(out_r, out_o));
  std::vector<float> g_r(net.param_count()), g_o(net.param_count());
  BatchWorkspace<float> ws;
  const double tgr = time_us([&] { net.loss_and_gradient(images, targets, batch, true, 9, g_r, Exec::serial_reference); }, 2);
  const double tgo = time_us([&] { net.loss_and_gradient(images, targets, batch, true, 9, g_o, ws, Exec::parallel); }, 2);
  row("network fwd+bwd batch 32", tgr, tgo, max_diff(g_r, g_o));

  // renderer: brute force against bounding-box culling
  const FisheyeRenderer renderer(CameraModel::standard());
  const DockScene scene = DockScene::standard(Pose2{});
  const Pose2 pose(-5.0, 1.0, 0.2);
  RenderOutput a, b2;
  const double rr = time_us([&] { a = renderer.render_reference(scene, pose); }, 2);
  const double ro = time_us([&] { b2 = renderer.render(scene, pose); }, 5);
  std::size_t mismatched = 0;
  for (std::size_t i = 0; i < a.image.pixels.size(); ++i) mismatched += a.image.pixels[i] != b2.image.pixels[i];
  row("render 848x800", rr, ro, double(mismatched));
  return 0;
}

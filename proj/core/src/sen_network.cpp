#include "coltrack/sen/network.hpp"

#include <cmath>
#include <string>

#include "coltrack/errors.hpp"

namespace coltrack::sen {
namespace {

void check_plane_shapes(const PlaneStack& planes, int rows, int cols,
                        std::size_t t) {
  for (const auto& plane : planes) {
    if (plane.rows() != rows || plane.cols() != cols)
      throw_invalid_input("window frame " + std::to_string(t) +
                          " has plane shape " + std::to_string(plane.rows()) +
                          "x" + std::to_string(plane.cols()) + ", expected " +
                          std::to_string(rows) + "x" + std::to_string(cols));
  }
}

Eigen::VectorXd sigmoid(const Eigen::VectorXd& v) {
  return v.unaryExpr([](double a) { return 1.0 / (1.0 + std::exp(-a)); });
}

Eigen::VectorXd flatten_maps(const std::vector<Eigen::MatrixXd>& maps) {
  const auto rows = maps.front().rows();
  const auto cols = maps.front().cols();
  Eigen::VectorXd x(static_cast<Eigen::Index>(maps.size()) * rows * cols);
  Eigen::Index k = 0;
  for (const auto& m : maps)
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index c = 0; c < cols; ++c) x(k++) = m(r, c);
  return x;
}

}  // namespace

ConvResult conv_forward(const PlaneStack& planes,
                        const std::vector<ConvKernel>& kernels) {
  if (kernels.empty()) throw_invalid_input("conv_forward needs at least one kernel");
  const auto rows = planes[0].rows();
  const auto cols = planes[0].cols();
  for (const auto& plane : planes)
    if (plane.rows() != rows || plane.cols() != cols)
      throw_invalid_input("conv_forward planes must share one shape");

  ConvResult result;
  result.pre.reserve(kernels.size());
  result.post.reserve(kernels.size());
  for (const auto& kernel : kernels) {
    if (kernel.w.size() != 3)
      throw_invalid_input("conv kernel must have 3 channel planes");
    Eigen::MatrixXd pre = Eigen::MatrixXd::Constant(rows, cols, kernel.bias);
    for (int ch = 0; ch < 3; ++ch) {
      const auto& in = planes[static_cast<std::size_t>(ch)];
      const auto& w = kernel.w[static_cast<std::size_t>(ch)];
      for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index c = 0; c < cols; ++c) {
          double acc = 0.0;
          for (int dr = -2; dr <= 2; ++dr) {
            const Eigen::Index rr = r + dr;
            if (rr < 0 || rr >= rows) continue;
            for (int dc = -2; dc <= 2; ++dc) {
              const Eigen::Index cc = c + dc;
              if (cc < 0 || cc >= cols) continue;
              acc += in(rr, cc) * w(dr + 2, dc + 2);
            }
          }
          pre(r, c) += acc;
        }
      }
    }
    result.post.push_back(pre.cwiseMax(0.0));
    result.pre.push_back(std::move(pre));
  }
  return result;
}

LstmState initial_state(int hidden) {
  return {Eigen::VectorXd::Zero(hidden), Eigen::VectorXd::Zero(hidden)};
}

LstmState lstm_step(const LstmWeights& w, const Eigen::VectorXd& x,
                    const LstmState& prev, LstmStepCache* cache) {
  const Eigen::VectorXd i = sigmoid(w.wi * x + w.ui * prev.h + w.bi);
  const Eigen::VectorXd f = sigmoid(w.wf * x + w.uf * prev.h + w.bf);
  const Eigen::VectorXd g = (w.wg * x + w.ug * prev.h + w.bg).array().tanh();
  const Eigen::VectorXd o = sigmoid(w.wo * x + w.uo * prev.h + w.bo);

  LstmState next;
  next.c = f.cwiseProduct(prev.c) + i.cwiseProduct(g);
  const Eigen::VectorXd tanh_c = next.c.array().tanh();
  next.h = o.cwiseProduct(tanh_c);

  if (cache) {
    cache->x = x;
    cache->i = i;
    cache->f = f;
    cache->g = g;
    cache->o = o;
    cache->c = next.c;
    cache->tanh_c = tanh_c;
    cache->h_prev = prev.h;
    cache->c_prev = prev.c;
  }
  return next;
}

std::vector<Point3> forward(const SenModel& model,
                            const std::vector<PlaneStack>& window,
                            ForwardCache* cache) {
  const auto& meta = model.meta;
  if (static_cast<int>(window.size()) != meta.window)
    throw_invalid_input("window has " + std::to_string(window.size()) +
                        " frames, model expects " + std::to_string(meta.window));
  const int rows = meta.plane_rows();
  const int cols = meta.plane_cols();

  if (cache) {
    cache->planes = window;
    cache->conv_pre.clear();
    cache->conv_pre.reserve(window.size());
    cache->steps.assign(window.size(), {});
  }

  LstmState state = initial_state(meta.hidden);
  for (std::size_t t = 0; t < window.size(); ++t) {
    check_plane_shapes(window[t], rows, cols, t);
    ConvResult conv = conv_forward(window[t], model.conv);
    const Eigen::VectorXd x = flatten_maps(conv.post);
    if (cache) {
      cache->conv_pre.push_back(std::move(conv.pre));
      state = lstm_step(model.lstm, x, state, &cache->steps[t]);
    } else {
      state = lstm_step(model.lstm, x, state, nullptr);
    }
  }

  const Eigen::VectorXd u = model.dense.w * state.h + model.dense.b;
  if (cache) {
    cache->h_final = state.h;
    cache->u = u;
  }

  std::vector<Point3> estimate(static_cast<std::size_t>(meta.m));
  const auto& norm = meta.norm;
  for (int mi = 0; mi < meta.m; ++mi) {
    estimate[static_cast<std::size_t>(mi)] = {
        u(3 * mi + 0) * norm.scale + norm.center.x,
        u(3 * mi + 1) * norm.scale + norm.center.y,
        u(3 * mi + 2) * norm.scale + norm.center.z,
    };
  }
  return estimate;
}

std::vector<Point3> estimate_colon(const SenModel& model,
                                   const std::vector<ColonoscopeShape>& window) {
  std::vector<PlaneStack> stacks;
  stacks.reserve(window.size());
  for (const auto& shape : window) {
    if (static_cast<int>(shape.points.size()) != model.meta.n)
      throw_invalid_input("scope frame has " +
                          std::to_string(shape.points.size()) +
                          " points, model expects " +
                          std::to_string(model.meta.n));
    stacks.push_back(stack_feature(build_feature(shape, model.meta.norm)));
  }
  return forward(model, stacks);
}

double loss(const std::vector<Point3>& estimate,
            const std::vector<Point3>& truth) {
  if (estimate.empty() || estimate.size() != truth.size())
    throw_invalid_input("loss needs matching non-empty point sets");
  double sum = 0.0;
  for (std::size_t m = 0; m < estimate.size(); ++m) {
    const Point3 d = estimate[m] - truth[m];
    sum += d.dot(d);
  }
  return sum / static_cast<double>(estimate.size());
}

void backward(const SenModel& model, const ForwardCache& cache,
              const std::vector<Point3>& estimate,
              const std::vector<Point3>& truth, SenGradients& grads) {
  const auto& meta = model.meta;
  if (static_cast<int>(estimate.size()) != meta.m ||
      static_cast<int>(truth.size()) != meta.m)
    throw_invalid_input("backward point sets must match the model's m");
  if (static_cast<int>(cache.steps.size()) != meta.window)
    throw_invalid_input("forward cache does not match the model's window");

  const int rows = meta.plane_rows();
  const int cols = meta.plane_cols();
  const double inv_m = 1.0 / static_cast<double>(meta.m);

  // Loss and de-normalization: y = u * scale + center, dL/dy = (2/M)(y - t).
  Eigen::VectorXd du(meta.output_dim());
  for (int mi = 0; mi < meta.m; ++mi) {
    const Point3 d = estimate[static_cast<std::size_t>(mi)] -
                     truth[static_cast<std::size_t>(mi)];
    du(3 * mi + 0) = 2.0 * inv_m * d.x * meta.norm.scale;
    du(3 * mi + 1) = 2.0 * inv_m * d.y * meta.norm.scale;
    du(3 * mi + 2) = 2.0 * inv_m * d.z * meta.norm.scale;
  }

  grads.dense.w.noalias() += du * cache.h_final.transpose();
  grads.dense.b += du;

  Eigen::VectorXd dh = model.dense.w.transpose() * du;
  Eigen::VectorXd dc = Eigen::VectorXd::Zero(meta.hidden);

  for (int t = meta.window - 1; t >= 0; --t) {
    const auto& s = cache.steps[static_cast<std::size_t>(t)];
    const Eigen::ArrayXd ones = Eigen::ArrayXd::Ones(meta.hidden);

    const Eigen::VectorXd da_o =
        (dh.array() * s.tanh_c.array() * s.o.array() * (ones - s.o.array()))
            .matrix();
    dc.array() += dh.array() * s.o.array() * (ones - s.tanh_c.array().square());

    const Eigen::VectorXd da_f =
        (dc.array() * s.c_prev.array() * s.f.array() * (ones - s.f.array()))
            .matrix();
    const Eigen::VectorXd da_i =
        (dc.array() * s.g.array() * s.i.array() * (ones - s.i.array())).matrix();
    const Eigen::VectorXd da_g =
        (dc.array() * s.i.array() * (ones - s.g.array().square())).matrix();

    auto& gl = grads.lstm;
    const auto xt = s.x.transpose();
    const auto ht = s.h_prev.transpose();
    gl.wi.noalias() += da_i * xt;
    gl.wf.noalias() += da_f * xt;
    gl.wg.noalias() += da_g * xt;
    gl.wo.noalias() += da_o * xt;
    gl.ui.noalias() += da_i * ht;
    gl.uf.noalias() += da_f * ht;
    gl.ug.noalias() += da_g * ht;
    gl.uo.noalias() += da_o * ht;
    gl.bi += da_i;
    gl.bf += da_f;
    gl.bg += da_g;
    gl.bo += da_o;

    Eigen::VectorXd dx = model.lstm.wi.transpose() * da_i;
    dx.noalias() += model.lstm.wf.transpose() * da_f;
    dx.noalias() += model.lstm.wg.transpose() * da_g;
    dx.noalias() += model.lstm.wo.transpose() * da_o;

    // Conv backward for this timestep: dx holds gradients of the rectified
    // maps in flatten order (kernel, row, col).
    const auto& planes = cache.planes[static_cast<std::size_t>(t)];
    const auto& pres = cache.conv_pre[static_cast<std::size_t>(t)];
    for (int k = 0; k < meta.conv_kernels; ++k) {
      const auto& pre = pres[static_cast<std::size_t>(k)];
      auto& gkernel = grads.conv[static_cast<std::size_t>(k)];
      const Eigen::Index base = static_cast<Eigen::Index>(k) * rows * cols;
      for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
          if (pre(r, c) <= 0.0) continue;
          const double dpre = dx(base + r * cols + c);
          gkernel.bias += dpre;
          for (int ch = 0; ch < 3; ++ch) {
            const auto& in = planes[static_cast<std::size_t>(ch)];
            auto& gw = gkernel.w[static_cast<std::size_t>(ch)];
            for (int dr = -2; dr <= 2; ++dr) {
              const int rr = r + dr;
              if (rr < 0 || rr >= rows) continue;
              for (int dcol = -2; dcol <= 2; ++dcol) {
                const int cc = c + dcol;
                if (cc < 0 || cc >= cols) continue;
                gw(dr + 2, dcol + 2) += dpre * in(rr, cc);
              }
            }
          }
        }
      }
    }

    dh = model.lstm.ui.transpose() * da_i;
    dh.noalias() += model.lstm.uf.transpose() * da_f;
    dh.noalias() += model.lstm.ug.transpose() * da_g;
    dh.noalias() += model.lstm.uo.transpose() * da_o;
    dc = dc.cwiseProduct(s.f);
  }
}

}  // namespace coltrack::sen

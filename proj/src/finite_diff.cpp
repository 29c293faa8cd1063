#include "pdcp/finite_diff.hpp"

#include <cmath>

namespace pdcp {

double finite_diff_check(const std::function<Tensor()>& f, const std::vector<Tensor>& params,
                         double step) {
  if (step <= 0.0) throw InvalidArgument("finite_diff_check: step must be > 0");

  Tape::active().reset();
  Tensor loss = f();
  Tape::active().backward(loss);
  std::vector<std::vector<double>> analytic;
  for (const Tensor& p : params)
    analytic.emplace_back(p.grad().begin(), p.grad().end());
  Tape::active().reset();

  double worst = 0.0;
  {
    Tape::NoGrad ng;
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
      Tensor p = params[pi];
      for (std::size_t i = 0; i < p.size(); ++i) {
        const double saved = p.raw()[i];
        p.raw()[i] = saved + step;
        const double fp = f().item();
        p.raw()[i] = saved - step;
        const double fm = f().item();
        p.raw()[i] = saved;
        if (!std::isfinite(fp) || !std::isfinite(fm))
          throw NonFinite("finite_diff_check: f diverged at perturbed point");
        const double central = (fp - fm) / (2.0 * step);
        const double err = std::abs(analytic[pi][i] - central) / std::max(1.0, std::abs(central));
        if (err > worst) worst = err;
      }
    }
  }
  return worst;
}

}  // namespace pdcp

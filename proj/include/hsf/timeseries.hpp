#pragma once

#include <iomanip>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "hsf/error.hpp"

namespace hsf {

/// Sampled observable. `axis` is "k" for drive cycles or "t" for time.
struct TimeSeries {
  std::string label;
  std::string axis = "k";
  std::vector<double> x;
  std::vector<double> y;

  TimeSeries() = default;
  TimeSeries(std::string lbl, std::string ax) : label(std::move(lbl)), axis(std::move(ax)) {}

  void push(double at, double value) {
    if (!x.empty() && !(at > x.back())) throw ContractError("time series sample points must increase strictly");
    x.push_back(at);
    y.push_back(value);
  }

  [[nodiscard]] std::size_t size() const noexcept { return x.size(); }

  void write_csv(std::ostream& os) const {
    const auto flags = os.flags();
    const auto prec = os.precision();
    os << axis << ",value\n" << std::setprecision(12);
    for (std::size_t i = 0; i < x.size(); ++i) os << x[i] << ',' << y[i] << '\n';
    os.flags(flags);
    os.precision(prec);
  }
};

}  // namespace hsf

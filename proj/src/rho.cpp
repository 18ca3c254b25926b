// Copyright (c) 2026 The gelcal authors.
// SPDX-License-Identifier: Apache-2.0

#include "gelcal/rho.hpp"

#include <cmath>
#include <sstream>

namespace gelcal {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double eval_quadratic(double v, int order) {
  switch (order) {
    case 0: return -0.5 * (1.0 + v) * (1.0 + v);
    case 1: return -(1.0 + v);
    case 2: return -1.0;
    default: return 0.0;
  }
}

double eval_el(double v, int order) {
  const double w = 1.0 - v;
  switch (order) {
    case 0: return std::log(w);
    case 1: return -1.0 / w;
    case 2: return -1.0 / (w * w);
    default: return -2.0 / (w * w * w);
  }
}

double eval_et(double v, int /*order*/) { return -std::exp(v); }

// -(1+theta v)^((theta+1)/theta) / (theta+1); already normalized.
double eval_power_divergence(double v, int order, double theta) {
  const double base = 1.0 + theta * v;
  switch (order) {
    case 0: return -std::pow(base, (theta + 1.0) / theta) / (theta + 1.0);
    case 1: return -std::pow(base, 1.0 / theta);
    case 2: return -std::pow(base, (1.0 - theta) / theta);
    default: return -(1.0 - theta) * std::pow(base, (1.0 - 2.0 * theta) / theta);
  }
}

}  // namespace

RhoFunction RhoFunction::quadratic() {
  return RhoFunction(RhoKind::Quadratic, 0.0, RhoDomain{-kInf, kInf});
}

RhoFunction RhoFunction::empirical_likelihood() {
  return RhoFunction(RhoKind::EmpiricalLikelihood, 0.0, RhoDomain{-kInf, 1.0});
}

RhoFunction RhoFunction::exponential_tilting() {
  return RhoFunction(RhoKind::ExponentialTilting, 0.0, RhoDomain{-kInf, kInf});
}

RhoFunction RhoFunction::power_divergence(double theta) {
  if (theta == 0.0 || theta == -1.0) {
    throw ThetaAtLimit(
        "power_divergence: theta in {0,-1}; use the et/el kinds for the limits");
  }
  // domain is 1 + theta*v > 0
  RhoDomain dom;
  if (theta > 0.0) {
    dom.lo = -1.0 / theta;
  } else {
    dom.hi = -1.0 / theta;
  }
  RhoFunction rho(RhoKind::PowerDivergence, theta, dom);
  return rho;
}

double RhoFunction::eval(double v, int order) const {
  if (order < 0 || order > 3) {
    throw InvariantViolation("RhoFunction::eval: order must be in 0..3");
  }
  if (!domain_.contains(v)) {
    std::ostringstream msg;
    msg << "rho argument " << v << " outside open domain (" << domain_.lo
        << ", " << domain_.hi << ")";
    throw OutOfDomain(msg.str());
  }
  switch (kind_) {
    case RhoKind::Quadratic: return eval_quadratic(v, order);
    case RhoKind::EmpiricalLikelihood: return eval_el(v, order);
    case RhoKind::ExponentialTilting: return eval_et(v, order);
    case RhoKind::PowerDivergence: return eval_power_divergence(v, order, theta_);
    case RhoKind::Custom:
      switch (order) {
        case 0: return custom_->value(v);
        case 1: return custom_->d1(v);
        case 2: return custom_->d2(v);
        default:
          if (!custom_->d3) {
            throw InvariantViolation("normalized custom rho has no third derivative callback");
          }
          return custom_->d3(v);
      }
  }
  throw InvariantViolation("RhoFunction::eval: unknown kind");
}

std::string RhoFunction::name() const {
  switch (kind_) {
    case RhoKind::Quadratic: return "quadratic";
    case RhoKind::EmpiricalLikelihood: return "el";
    case RhoKind::ExponentialTilting: return "et";
    case RhoKind::PowerDivergence: {
      std::ostringstream s;
      s << "cressie-read:" << theta_;
      return s.str();
    }
    case RhoKind::Custom: return "custom";
  }
  return "?";
}

RhoFunction normalize(const RawRho& raw) {
  if (!raw.value || !raw.d1 || !raw.d2) {
    throw InvariantViolation("normalize: value, d1 and d2 callbacks are required");
  }
  const double a = raw.d1(0.0);
  const double b = raw.d2(0.0);
  if (a == 0.0 || b == 0.0) {
    throw DegenerateRho("normalize: rho'(0) and rho''(0) must be nonzero");
  }
  // normalized(v) = -(b/a^2) * raw((a/b) v); first and second derivatives at
  // zero become -1.
  const double scale_out = -b / (a * a);
  const double scale_in = a / b;

  auto transformed = std::make_shared<RawRho>();
  const RawRho src = raw;  // copy callbacks for capture
  transformed->value = [src, scale_out, scale_in](double v) {
    return scale_out * src.value(scale_in * v);
  };
  transformed->d1 = [src, scale_out, scale_in](double v) {
    return scale_out * scale_in * src.d1(scale_in * v);
  };
  transformed->d2 = [src, scale_out, scale_in](double v) {
    return scale_out * scale_in * scale_in * src.d2(scale_in * v);
  };
  if (src.d3) {
    transformed->d3 = [src, scale_out, scale_in](double v) {
      return scale_out * scale_in * scale_in * scale_in * src.d3(scale_in * v);
    };
  } else {
    transformed->d3 = nullptr;
  }
  // map the raw open domain through v -> v/scale_in
  RhoDomain dom;
  if (scale_in > 0.0) {
    dom.lo = raw.domain.lo / scale_in;
    dom.hi = raw.domain.hi / scale_in;
  } else {
    dom.lo = raw.domain.hi / scale_in;
    dom.hi = raw.domain.lo / scale_in;
  }
  transformed->domain = dom;

  RhoFunction rho(RhoKind::Custom, 0.0, dom);
  rho.custom_ = std::move(transformed);
  return rho;
}

RhoFunction parse_rho(const std::string& name) {
  if (name == "quadratic" || name == "q") return RhoFunction::quadratic();
  if (name == "el") return RhoFunction::empirical_likelihood();
  if (name == "et") return RhoFunction::exponential_tilting();
  const std::string prefix = "cressie-read:";
  if (name.rfind(prefix, 0) == 0) {
    const std::string arg = name.substr(prefix.size());
    std::size_t pos = 0;
    double theta = 0.0;
    try {
      theta = std::stod(arg, &pos);
    } catch (const std::exception&) {
      throw ConfigError("unparseable cressie-read theta: '" + arg + "'");
    }
    if (pos != arg.size()) {
      throw ConfigError("unparseable cressie-read theta: '" + arg + "'");
    }
    return RhoFunction::power_divergence(theta);
  }
  throw ConfigError("unknown rho name '" + name +
                    "' (expected quadratic, el, et or cressie-read:<theta>)");
}

}  // namespace gelcal

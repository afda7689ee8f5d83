#include "dissflow/dissipation.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace dissflow {

LawPtr DissipationFunction::with_compression(double) const {
  throw std::invalid_argument("edge law has no adjustable compression");
}

double gas_f(double resistance, double compression, double flow) {
  return resistance * flow * std::abs(flow) - compression;
}

double gas_f_inverse(double resistance, double compression, double drop) {
  const double u = drop + compression;
  return std::copysign(std::sqrt(std::abs(u) / resistance), u);
}

double gas_psi(double resistance, double compression, double drop) {
  const double u = std::abs(drop + compression);
  return (2.0 / 3.0) * u * std::sqrt(u) / std::sqrt(resistance);
}

double gas_f(const GasPipe& pipe, double flow) {
  return gas_f(pipe.resistance(), pipe.compression(), flow);
}
double gas_f_inverse(const GasPipe& pipe, double drop) {
  return gas_f_inverse(pipe.resistance(), pipe.compression(), drop);
}
double gas_psi(const GasPipe& pipe, double drop) {
  return gas_psi(pipe.resistance(), pipe.compression(), drop);
}

GasPipe::GasPipe(double resistance, double compression, std::optional<Compressor> compressor)
    : resistance_(resistance), compression_(compression), compressor_(std::move(compressor)) {
  if (!(resistance_ > 0.0) || !std::isfinite(resistance_)) {
    throw std::invalid_argument("gas pipe resistance must be finite and > 0");
  }
  if (!std::isfinite(compression_)) {
    throw std::invalid_argument("gas pipe compression must be finite");
  }
  if (compressor_) {
    const Interval& r = compressor_->range;
    if (!(r.lo <= r.hi) || !std::isfinite(r.lo) || !std::isfinite(r.hi)) {
      throw std::invalid_argument("compressor range must be finite with b_min <= b_max");
    }
    if (!r.contains(compression_)) {
      throw std::invalid_argument("compression outside compressor range");
    }
  } else if (compression_ != 0.0) {
    throw std::invalid_argument("pipe without compressor must have zero compression");
  }
}

std::shared_ptr<const GasPipe> GasPipe::from_geometry(double length, double alpha, double compression,
                                                      std::optional<Compressor> compressor) {
  if (!(length > 0.0) || !(alpha > 0.0)) {
    throw std::invalid_argument("gas pipe length and alpha must be > 0");
  }
  auto pipe = std::make_shared<GasPipe>(0.5 * length * alpha, compression, std::move(compressor));
  pipe->length_ = length;
  pipe->alpha_ = alpha;
  return pipe;
}

double GasPipe::value(double flow) const { return gas_f(resistance_, compression_, flow); }

double GasPipe::inverse(double drop) const { return gas_f_inverse(resistance_, compression_, drop); }

double GasPipe::primitive(double drop) const { return gas_psi(resistance_, compression_, drop); }

double GasPipe::inverse_derivative(double drop, double cap) const {
  const double u = std::abs(drop + compression_);
  const double denom = 2.0 * std::sqrt(resistance_ * u);
  if (denom * cap <= 1.0) return cap;
  return 1.0 / denom;
}

LawPtr GasPipe::reversed() const {
  std::optional<Compressor> flipped;
  if (compressor_) {
    flipped = Compressor{{-compressor_->range.hi, -compressor_->range.lo}, compressor_->position};
  }
  auto pipe = std::make_shared<GasPipe>(resistance_, -compression_, flipped);
  pipe->length_ = length_;
  pipe->alpha_ = alpha_;
  return pipe;
}

std::optional<Interval> GasPipe::compression_range() const {
  if (!compressor_) return std::nullopt;
  return compressor_->range;
}

LawPtr GasPipe::with_compression(double b) const {
  if (!compressor_) return DissipationFunction::with_compression(b);
  if (!compressor_->range.contains(b)) {
    throw std::invalid_argument("compression outside compressor range");
  }
  auto pipe = std::make_shared<GasPipe>(*this);
  pipe->compression_ = b;
  return pipe;
}

std::string GasPipe::describe() const {
  std::ostringstream os;
  os << "gas(c=" << resistance_ << ", b=" << compression_;
  if (compressor_) os << " in [" << compressor_->range.lo << ", " << compressor_->range.hi << "]";
  os << ")";
  return os.str();
}

bool GasPipe::equals(const DissipationFunction& other) const {
  const auto* o = dynamic_cast<const GasPipe*>(&other);
  return o != nullptr && resistance_ == o->resistance_ && compression_ == o->compression_ &&
         compressor_ == o->compressor_ && length_ == o->length_ && alpha_ == o->alpha_;
}

LinearResistor::LinearResistor(double resistance) : resistance_(resistance) {
  if (!(resistance_ > 0.0) || !std::isfinite(resistance_)) {
    throw std::invalid_argument("linear resistance must be finite and > 0");
  }
}

double LinearResistor::inverse_derivative(double, double cap) const {
  const double d = 1.0 / resistance_;
  return d > cap ? cap : d;
}

LawPtr LinearResistor::reversed() const { return std::make_shared<LinearResistor>(resistance_); }

std::string LinearResistor::describe() const {
  std::ostringstream os;
  os << "linear(r=" << resistance_ << ")";
  return os.str();
}

bool LinearResistor::equals(const DissipationFunction& other) const {
  const auto* o = dynamic_cast<const LinearResistor*>(&other);
  return o != nullptr && resistance_ == o->resistance_;
}

}  // namespace dissflow

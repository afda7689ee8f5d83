#pragma once

#include <memory>
#include <optional>
#include <string>

namespace dissflow {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  bool contains(double x) const { return lo <= x && x <= hi; }
  double width() const { return hi - lo; }
  double clamp(double x) const { return x < lo ? lo : (x > hi ? hi : x); }
  bool operator==(const Interval&) const = default;
};

inline constexpr double kDefaultDerivativeCap = 1e8;

/// Strictly increasing edge law f mapping flow to potential drop
/// (pi_i - pi_j = f(phi_ij)), together with its inverse, a primitive of the
/// inverse, and the inverse's derivative for Hessian assembly.
///
/// A law may expose an operational parameter (compression offset b) with an
/// admissible box; `with_compression` returns a copy at another setting.
class DissipationFunction {
 public:
  virtual ~DissipationFunction() = default;

  virtual double value(double flow) const = 0;
  virtual double inverse(double drop) const = 0;
  /// Primitive of inverse(); normalized to vanish where inverse() does.
  virtual double primitive(double drop) const = 0;
  /// d inverse / d drop, clamped to `cap`.
  virtual double inverse_derivative(double drop, double cap = kDefaultDerivativeCap) const = 0;

  /// Law of the same physical edge seen along the opposite orientation:
  /// reversed(x) = -value(-x).
  virtual std::shared_ptr<const DissipationFunction> reversed() const = 0;

  virtual std::optional<Interval> compression_range() const { return std::nullopt; }
  virtual double compression() const { return 0.0; }
  /// Throws std::invalid_argument when the law has no compressor or `b` is
  /// outside its range.
  virtual std::shared_ptr<const DissipationFunction> with_compression(double b) const;

  virtual std::string describe() const = 0;
  virtual bool equals(const DissipationFunction& other) const = 0;
};

using LawPtr = std::shared_ptr<const DissipationFunction>;

/// Steady gas pipe: f(phi) = c * phi * |phi| - b with c = L * alpha / 2.
///
/// The compression offset b is fixed at 0 unless the pipe hosts a compressor,
/// in which case b may take any value in the compressor box.
class GasPipe final : public DissipationFunction {
 public:
  struct Compressor {
    Interval range;
    std::optional<double> position;  // x_c along the pipe; metadata only
    bool operator==(const Compressor&) const = default;
  };

  /// Resistance form. Throws std::invalid_argument unless c > 0.
  explicit GasPipe(double resistance, double compression = 0.0,
                   std::optional<Compressor> compressor = std::nullopt);

  /// Length/friction form, c = length * alpha / 2.
  static std::shared_ptr<const GasPipe> from_geometry(double length, double alpha,
                                                      double compression = 0.0,
                                                      std::optional<Compressor> compressor = std::nullopt);

  double resistance() const { return resistance_; }
  std::optional<double> length() const { return length_; }
  std::optional<double> alpha() const { return alpha_; }
  const std::optional<Compressor>& compressor() const { return compressor_; }

  double value(double flow) const override;
  double inverse(double drop) const override;
  double primitive(double drop) const override;
  double inverse_derivative(double drop, double cap = kDefaultDerivativeCap) const override;
  LawPtr reversed() const override;
  std::optional<Interval> compression_range() const override;
  double compression() const override { return compression_; }
  LawPtr with_compression(double b) const override;
  std::string describe() const override;
  bool equals(const DissipationFunction& other) const override;

 private:
  double resistance_;
  double compression_;
  std::optional<Compressor> compressor_;
  std::optional<double> length_;
  std::optional<double> alpha_;
};

/// f(phi) = r * phi, the resistive (Ohm's law) analogue.
class LinearResistor final : public DissipationFunction {
 public:
  explicit LinearResistor(double resistance);

  double resistance() const { return resistance_; }

  double value(double flow) const override { return resistance_ * flow; }
  double inverse(double drop) const override { return drop / resistance_; }
  double primitive(double drop) const override { return 0.5 * drop * drop / resistance_; }
  double inverse_derivative(double, double cap = kDefaultDerivativeCap) const override;
  LawPtr reversed() const override;
  std::string describe() const override;
  bool equals(const DissipationFunction& other) const override;

 private:
  double resistance_;
};

// Closed forms of the gas law, usable without constructing a pipe.
double gas_f(double resistance, double compression, double flow);
double gas_f_inverse(double resistance, double compression, double drop);
double gas_psi(double resistance, double compression, double drop);

double gas_f(const GasPipe& pipe, double flow);
double gas_f_inverse(const GasPipe& pipe, double drop);
double gas_psi(const GasPipe& pipe, double drop);

}  // namespace dissflow

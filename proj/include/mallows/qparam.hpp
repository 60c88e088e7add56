#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace mallows {

enum class QRegime { SubCritical, Critical, SuperCritical };

/// The Mallows parameter q > 0. Carries its regime so that operations
/// restricted to one side of q = 1 can state their precondition once.
class QParam {
 public:
  explicit QParam(double q) : q_(q) {
    if (!std::isfinite(q) || q <= 0.0) {
      throw std::domain_error("QParam: q must be a finite positive real, got " +
                              std::to_string(q));
    }
  }

  double value() const { return q_; }

  QRegime regime() const {
    if (q_ < 1.0) return QRegime::SubCritical;
    if (q_ > 1.0) return QRegime::SuperCritical;
    return QRegime::Critical;
  }

  bool sub_critical() const { return q_ < 1.0; }
  bool critical() const { return q_ == 1.0; }
  bool super_critical() const { return q_ > 1.0; }

  /// 1/q, used to express q > 1 laws through the q < 1 machinery.
  QParam reciprocal() const { return QParam(1.0 / q_); }

  void require_sub_critical(const char* what) const {
    if (!sub_critical())
      throw std::domain_error(std::string(what) + ": requires 0 < q < 1, got q = " +
                              std::to_string(q_));
  }

  void require_super_critical(const char* what) const {
    if (!super_critical())
      throw std::domain_error(std::string(what) + ": requires q > 1, got q = " +
                              std::to_string(q_));
  }

  void require_not_critical(const char* what) const {
    if (critical())
      throw std::domain_error(std::string(what) + ": undefined at q = 1");
  }

 private:
  double q_;
};

}  // namespace mallows

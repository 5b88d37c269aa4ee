#pragma once

#include <memory>
#include <string>

#include "mvngb/types.hpp"

namespace mvngb {

// Distribution family seen by the boosting loop: a log score, its gradient
// (ordinary or natural) and the constant-theta initializer. Implementations
// are stateless apart from the dimension and safe to share across threads.
class Family {
 public:
  virtual ~Family() = default;

  // "mvn-<p>" or "normal"; round-trips through make_family.
  virtual std::string tag() const = 0;
  virtual int target_dim() const = 0;
  virtual int param_count() const = 0;

  virtual double nll(ConstVecRef theta, ConstVecRef y) const = 0;
  virtual Vector gradient(ConstVecRef theta, ConstVecRef y, bool natural) const = 0;
  virtual ThetaVector marginal_mle(ConstRowRef y) const = 0;
};

class MvnFamily final : public Family {
 public:
  explicit MvnFamily(int p);

  std::string tag() const override;
  int target_dim() const override { return p_; }
  int param_count() const override { return m_; }
  double nll(ConstVecRef theta, ConstVecRef y) const override;
  Vector gradient(ConstVecRef theta, ConstVecRef y, bool natural) const override;
  ThetaVector marginal_mle(ConstRowRef y) const override;

 private:
  int p_;
  int m_;
};

class NormalFamily final : public Family {
 public:
  std::string tag() const override { return "normal"; }
  int target_dim() const override { return 1; }
  int param_count() const override { return 2; }
  double nll(ConstVecRef theta, ConstVecRef y) const override;
  Vector gradient(ConstVecRef theta, ConstVecRef y, bool natural) const override;
  ThetaVector marginal_mle(ConstRowRef y) const override;
};

// Throws InvalidArgument for an unknown tag.
std::unique_ptr<Family> make_family(const std::string& tag);

}  // namespace mvngb

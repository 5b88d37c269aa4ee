#include "mvngb/family.hpp"

#include <charconv>

#include "mvngb/error.hpp"
#include "mvngb/mvn.hpp"
#include "mvngb/normal.hpp"

namespace mvngb {

MvnFamily::MvnFamily(int p) : p_(p), m_(mvn::param_count(p)) {}

std::string MvnFamily::tag() const { return "mvn-" + std::to_string(p_); }

double MvnFamily::nll(ConstVecRef theta, ConstVecRef y) const { return mvn::nll(theta, y); }

Vector MvnFamily::gradient(ConstVecRef theta, ConstVecRef y, bool natural) const {
  return natural ? mvn::natural_gradient(theta, y) : mvn::score(theta, y);
}

ThetaVector MvnFamily::marginal_mle(ConstRowRef y) const {
  if (y.cols() != p_) {
    throw InvalidArgument("target column count does not match the family dimension");
  }
  return mvn::marginal_mle(y);
}

namespace {
void check_normal(ConstVecRef theta, ConstVecRef y) {
  if (theta.size() != 2 || y.size() != 1) {
    throw InvalidArgument("univariate family expects theta of length 2 and a scalar target");
  }
}
}  // namespace

double NormalFamily::nll(ConstVecRef theta, ConstVecRef y) const {
  check_normal(theta, y);
  return normal::nll(theta(0), theta(1), y(0));
}

Vector NormalFamily::gradient(ConstVecRef theta, ConstVecRef y, bool natural) const {
  check_normal(theta, y);
  if (!theta.allFinite()) {
    throw InvalidParameter("theta contains non-finite entries");
  }
  return natural ? Vector(normal::natural_gradient(theta(0), theta(1), y(0)))
                 : Vector(normal::score(theta(0), theta(1), y(0)));
}

ThetaVector NormalFamily::marginal_mle(ConstRowRef y) const {
  if (y.cols() != 1) {
    throw InvalidArgument("univariate family expects a single target column");
  }
  return normal::marginal_mle(y.col(0));
}

std::unique_ptr<Family> make_family(const std::string& tag) {
  if (tag == "normal") {
    return std::make_unique<NormalFamily>();
  }
  if (tag.rfind("mvn-", 0) == 0) {
    int p = 0;
    const char* first = tag.data() + 4;
    const char* last = tag.data() + tag.size();
    auto [ptr, ec] = std::from_chars(first, last, p);
    if (ec == std::errc() && ptr == last && p >= 1) {
      return std::make_unique<MvnFamily>(p);
    }
  }
  throw InvalidArgument("unknown distribution family '" + tag + "'");
}

}  // namespace mvngb

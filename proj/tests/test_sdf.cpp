#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "pianomime/common.hpp"
#include "pianomime/sdf.hpp"

using namespace pianomime;

namespace {

const KeyGeometry& geom() {
  static KeyGeometry g = KeyGeometry::standard_piano();
  return g;
}

PianoState state_of(std::initializer_list<int> keys) {
  PianoState s;
  for (int k : keys) s.keys[static_cast<std::size_t>(k)] = 1;
  return s;
}

Eigen::Vector3d random_query(Rng& rng) {
  const BBox box = geom().bounding_box().inflated(0.05);
  return Eigen::Vector3d(rng.uniform(box.lo.x(), box.hi.x()), rng.uniform(box.lo.y(), box.hi.y()),
                         rng.uniform(box.lo.z(), box.hi.z()));
}

PianoState random_state(Rng& rng) {
  PianoState s;
  const int n = static_cast<int>(rng.uniform_int(5));  // 0..4 pressed keys
  for (int i = 0; i < n; ++i) s.keys[rng.uniform_int(kNumKeys)] = 1;
  return s;
}

// Straightforward re-derivation: min over pressed keys of the distance to
// the footprint-center site, capped at d_empty.
double brute_sdf(const Eigen::Vector3d& x, const PianoState& s, double d_empty) {
  double best = d_empty;
  for (int k = 0; k < kNumKeys; ++k) {
    if (!s.keys[static_cast<std::size_t>(k)]) continue;
    const Key& key = geom().keys[static_cast<std::size_t>(k)];
    const Eigen::Vector3d site(0.5 * (key.x_front + key.x_back), key.center_y, key.top_z);
    best = std::min(best, (x - site).norm());
  }
  return best;
}

}  // namespace

TEST_SUITE("sdf") {
  TEST_CASE("key sites sit at the footprint center at rest height") {
    for (int k : {0, 1, 39, 40, 87}) {
      const Eigen::Vector3d site = key_site(geom(), k);
      const Key& key = geom().keys[static_cast<std::size_t>(k)];
      CHECK(site.x() == 0.5 * (key.x_front + key.x_back));
      CHECK(site.y() == key.center_y);
      CHECK(site.z() == key.top_z);
    }
    CHECK_THROWS_AS(key_site(geom(), -1), std::invalid_argument);
    CHECK_THROWS_AS(key_site(geom(), 88), std::invalid_argument);
  }

  TEST_CASE("distance at a pressed key site is zero and grows linearly along a ray") {
    const PianoState s = state_of({44});
    const Eigen::Vector3d site = key_site(geom(), 44);
    CHECK(piano_sdf(site, s, geom()) == 0.0);
    for (double r : {0.001, 0.01, 0.3}) {
      const Eigen::Vector3d x = site + r * Eigen::Vector3d(0.0, 0.6, 0.8);
      CHECK(piano_sdf(x, s, geom()) == doctest::Approx(r).epsilon(1e-12));
    }
  }

  TEST_CASE("multiple pressed keys take the minimum distance") {
    const PianoState s = state_of({30, 60});
    // A point clearly nearer key 60.
    const Eigen::Vector3d near60 = key_site(geom(), 60) + Eigen::Vector3d(0.0, 0.002, 0.01);
    const double d = piano_sdf(near60, s, geom());
    CHECK(d == doctest::Approx((near60 - key_site(geom(), 60)).norm()).epsilon(1e-12));
    CHECK(d < (near60 - key_site(geom(), 30)).norm());
  }

  TEST_CASE("empty states return the sentinel and set the flag") {
    bool empty = false;
    const double d = piano_sdf(Eigen::Vector3d(0.05, 1.0, 0.01), PianoState{}, geom(), 2.0, &empty);
    CHECK(d == 2.0);
    CHECK(empty);

    empty = true;
    piano_sdf(key_site(geom(), 10), state_of({10}), geom(), 2.0, &empty);
    CHECK(!empty);

    // A custom sentinel is honored.
    CHECK(piano_sdf(Eigen::Vector3d::Zero(), PianoState{}, geom(), 0.75) == 0.75);
  }

  TEST_CASE("distance is capped at the sentinel even with pressed keys") {
    const PianoState s = state_of({0});
    const Eigen::Vector3d far(0.05, 50.0, 0.0);
    CHECK(piano_sdf(far, s, geom(), 2.0) == 2.0);
    CHECK((far - key_site(geom(), 0)).norm() > 2.0);
  }

  TEST_CASE("matches the brute-force oracle exactly on random pairs") {
    Rng rng(2024);
    for (int trial = 0; trial < 2000; ++trial) {
      const PianoState s = random_state(rng);
      const Eigen::Vector3d x = random_query(rng);
      CHECK(piano_sdf(x, s, geom()) == brute_sdf(x, s, 2.0));
    }
  }

  TEST_CASE("the field is 1-Lipschitz across states and query pairs") {
    Rng rng(77);
    for (int trial = 0; trial < 2000; ++trial) {
      const PianoState s = random_state(rng);
      const Eigen::Vector3d a = random_query(rng);
      const Eigen::Vector3d b = random_query(rng);
      const double da = piano_sdf(a, s, geom());
      const double db = piano_sdf(b, s, geom());
      CHECK(std::abs(da - db) <= (a - b).norm() + 1e-12);
    }
  }

  TEST_CASE("batch evaluation equals pointwise evaluation for any worker count") {
    Rng rng(5);
    const PianoState s = state_of({20, 47, 81});
    std::vector<Eigen::Vector3d> queries;
    for (int i = 0; i < 500; ++i) queries.push_back(random_query(rng));

    const std::vector<double> serial = piano_sdf_batch(queries, s, geom(), 2.0, 1);
    const std::vector<double> threaded = piano_sdf_batch(queries, s, geom(), 2.0, 4);
    REQUIRE(serial.size() == queries.size());
    for (std::size_t i = 0; i < queries.size(); ++i) {
      CHECK(serial[i] == piano_sdf(queries[i], s, geom()));
      CHECK(threaded[i] == serial[i]);
    }
  }

  TEST_CASE("positional encoding of the box center is all zeros and ones") {
    BBox box;
    box.lo = Eigen::Vector3d(-1.0, 0.0, 2.0);
    box.hi = Eigen::Vector3d(1.0, 4.0, 6.0);
    const Eigen::Vector3d center = 0.5 * (box.lo + box.hi);
    const Eigen::VectorXd enc = positional_encoding(center, 3, box);
    REQUIRE(enc.size() == 18);
    for (int i = 0; i < 18; i += 2) {
      CHECK(enc[i] == 0.0);      // sin terms
      CHECK(enc[i + 1] == 1.0);  // cos terms
    }
  }

  TEST_CASE("positional encoding matches the formula for two frequencies") {
    BBox box;
    box.lo = Eigen::Vector3d(0.0, -2.0, 1.0);
    box.hi = Eigen::Vector3d(2.0, 2.0, 3.0);
    const Eigen::Vector3d x(0.5, 1.0, 2.5);
    const Eigen::VectorXd enc = positional_encoding(x, 2, box);
    REQUIRE(enc.size() == 12);
    int at = 0;
    for (int d = 0; d < 3; ++d) {
      const double xn = 2.0 * (x[d] - box.lo[d]) / (box.hi[d] - box.lo[d]) - 1.0;
      for (int k = 0; k < 2; ++k) {
        const double arg = std::ldexp(1.0, k) * M_PI * xn;
        CHECK(enc[at++] == std::sin(arg));
        CHECK(enc[at++] == std::cos(arg));
      }
    }
  }

  TEST_CASE("positional encoding separates nearby points") {
    const BBox box = geom().bounding_box().inflated(0.05);
    // Millimeter-spaced probes along the keyboard must all encode
    // differently, otherwise the goal features would alias distinct targets.
    std::vector<Eigen::VectorXd> codes;
    for (int i = 0; i < 60; ++i) {
      const Eigen::Vector3d x(0.05, 0.2 + 0.001 * i, 0.008);
      codes.push_back(positional_encoding(x, 4, box));
    }
    for (std::size_t i = 0; i < codes.size(); ++i)
      for (std::size_t j = i + 1; j < codes.size(); ++j)
        CHECK((codes[i] - codes[j]).cwiseAbs().maxCoeff() > 1e-6);
  }

  TEST_CASE("degenerate boxes and bad frequency counts are handled") {
    BBox flat;
    flat.lo = Eigen::Vector3d(0.0, 0.0, 1.0);
    flat.hi = Eigen::Vector3d(1.0, 1.0, 1.0);  // zero z span
    const Eigen::VectorXd enc = positional_encoding(Eigen::Vector3d(0.5, 0.5, 1.0), 1, flat);
    // The degenerate dimension normalizes to zero rather than dividing by zero.
    CHECK(enc[4] == 0.0);
    CHECK(enc[5] == 1.0);

    CHECK_THROWS_AS(positional_encoding(Eigen::Vector3d::Zero(), 0, flat),
                    std::invalid_argument);
  }
}

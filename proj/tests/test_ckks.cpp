// The lattice backend and its building blocks: modular arithmetic, the
// negacyclic NTT, RNS polynomials, the canonical-embedding encoder, and
// end-to-end agreement with the exact-arithmetic backend.
#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "hegnn/hegnn.hpp"

using namespace hegnn;
using namespace hegnn::he::ckks;

namespace {

he::HEParams small_params(int levels = 4) {
  he::HEParams p;
  p.ring_degree = 1 << 11;
  p.prime_bits.push_back(60);
  for (int i = 0; i < levels; ++i) p.prime_bits.push_back(40);
  p.prime_bits.push_back(60);
  p.scale_bits = 40;
  return p;
}

std::vector<double> random_vec(std::size_t n, std::mt19937_64& rng, double bound = 4.0) {
  std::uniform_real_distribution<double> u(-bound, bound);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

void check_close(const std::vector<double>& got, const std::vector<double>& want,
                 std::size_t n, double tol) {
  REQUIRE(got.size() >= n);
  double worst = 0.0;
  for (std::size_t i = 0; i < n; ++i) worst = std::max(worst, std::abs(got[i] - want[i]));
  CHECK(worst <= tol);
}

}  // namespace

TEST_CASE("modular arithmetic primitives") {
  const u64 q = 1152921504606846883ULL;  // < 2^60, prime
  REQUIRE(is_prime(q));
  CHECK(add_mod(q - 1, 5, q) == 4);
  CHECK(sub_mod(3, 7, q) == q - 4);
  CHECK(mul_mod(q - 1, q - 1, q) == 1);  // (-1)^2
  CHECK(pow_mod(2, 62, q) == mul_mod(pow_mod(2, 31, q), pow_mod(2, 31, q), q));
  CHECK(mul_mod(inv_mod(12345, q), 12345, q) == 1);

  SECTION("Shoup multiplication agrees with the plain route") {
    std::mt19937_64 rng(7);
    for (int t = 0; t < 50; ++t) {
      const u64 a = rng() % q, w = rng() % q;
      CHECK(mul_mod_shoup(a, w, shoup_precompute(w, q), q) == mul_mod(a, w, q));
    }
  }
  SECTION("primality test on known values") {
    CHECK(is_prime(2));
    CHECK(is_prime(65537));
    CHECK_FALSE(is_prime(1));
    CHECK_FALSE(is_prime(65539 * 3ULL));
    CHECK_FALSE(is_prime((1ULL << 40) + 1));  // 2^40+1 = 257 * 4278255361
  }
}

TEST_CASE("NTT prime generation honours the congruence and exclusions") {
  const std::size_t n = 1 << 11;
  auto primes = generate_ntt_primes(40, n, 4, {});
  REQUIRE(primes.size() == 4);
  for (u64 q : primes) {
    CHECK(is_prime(q));
    CHECK(q % (2 * n) == 1);
    const double bits = std::log2(static_cast<double>(q));
    CHECK(bits > 39.0);
    CHECK(bits < 41.0);
  }
  CHECK(std::set<u64>(primes.begin(), primes.end()).size() == primes.size());

  auto more = generate_ntt_primes(40, n, 2, primes);
  for (u64 q : more) {
    CHECK(std::find(primes.begin(), primes.end(), q) == primes.end());
  }
}

TEST_CASE("negacyclic NTT round-trips and realizes polynomial products") {
  const std::size_t n = 8;
  const u64 q = 257;  // 257 = 1 mod 16
  NttTables tables(n, q);

  std::mt19937_64 rng(3);
  std::vector<u64> a(n), b(n);
  for (auto& x : a) x = rng() % q;
  for (auto& x : b) x = rng() % q;

  SECTION("forward then inverse is the identity") {
    std::vector<u64> t = a;
    tables.forward(t.data());
    tables.inverse(t.data());
    CHECK(t == a);
  }
  SECTION("pointwise NTT product equals schoolbook product mod x^n + 1") {
    std::vector<u64> want(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        const u64 prod = mul_mod(a[i], b[j], q);
        if (i + j < n) {
          want[i + j] = add_mod(want[i + j], prod, q);
        } else {
          want[i + j - n] = sub_mod(want[i + j - n], prod, q);
        }
      }
    }
    std::vector<u64> fa = a, fb = b;
    tables.forward(fa.data());
    tables.forward(fb.data());
    std::vector<u64> fc(n);
    for (std::size_t i = 0; i < n; ++i) fc[i] = mul_mod(fa[i], fb[i], q);
    tables.inverse(fc.data());
    CHECK(fc == want);
  }
}

TEST_CASE("RNS polynomial helpers") {
  RnsContext ctx;
  ctx.init(16, generate_ntt_primes(40, 16, 3, {}));

  std::mt19937_64 rng(11);
  RnsPoly a = sample_uniform(ctx, 2, false, rng);
  RnsPoly b = sample_uniform(ctx, 2, false, rng);

  SECTION("subtraction undoes addition") {
    RnsPoly c = a;
    add_inplace(ctx, c, b);
    sub_inplace(ctx, c, b);
    CHECK(c.data == a.data);
  }
  SECTION("negation is an involution") {
    RnsPoly c = a;
    negate_inplace(ctx, c);
    negate_inplace(ctx, c);
    CHECK(c.data == a.data);
  }
  SECTION("dropping rows keeps the leading primes") {
    RnsPoly c = make_poly(ctx, 2, /*with_special=*/true, false);
    REQUIRE(c.rows() == 3);
    CHECK(c.prime_ids.back() == ctx.special_index());
    drop_rows_to(c, 2);
    CHECK(c.rows() == 2);
    CHECK(c.prime_ids == std::vector<std::uint32_t>{0, 1});
  }
  SECTION("ternary and gaussian samples are small, uniform fills the range") {
    RnsPoly t = sample_ternary(ctx, 1, false, rng);
    const u64 q = ctx.primes[0];
    for (std::size_t j = 0; j < t.n; ++j) {
      const u64 v = t.row(0)[j];
      CHECK((v == 0 || v == 1 || v == q - 1));
    }
    RnsPoly g = sample_gaussian(ctx, 1, false, rng);
    for (std::size_t j = 0; j < g.n; ++j) {
      const u64 v = g.row(0)[j];
      const u64 mag = v > q / 2 ? q - v : v;
      CHECK(mag < 64);  // |e| ~ sigma 3.2; 20 sigma is astronomically unlikely
    }
  }
}

TEST_CASE("canonical encoder round-trips real slot vectors") {
  const std::size_t n = 1 << 7;
  RnsContext ctx;
  ctx.init(n, generate_ntt_primes(45, n, 2, {}));
  Encoder enc(n);
  REQUIRE(enc.slot_count() == n / 2);

  std::mt19937_64 rng(5);
  const auto values = random_vec(enc.slot_count(), rng, 8.0);
  const double scale = std::pow(2.0, 40);
  RnsPoly p = enc.encode(ctx, values, scale, 2);
  const auto back = enc.decode(ctx, p, scale);
  check_close(back, values, values.size(), 1e-8);

  SECTION("scaled values that overflow the modulus are rejected") {
    CHECK_THROWS_AS(enc.encode(ctx, {1e30}, scale, 2), CapacityError);
  }
}

TEST_CASE("lattice encrypt/decrypt round-trip at small parameters") {
  he::CkksBackend b(small_params(), 42);
  auto keys = b.keygen({1});
  std::mt19937_64 rng(1);

  const auto values = random_vec(b.params().slot_count(), rng, 64.0);
  auto ct = b.encrypt(values, keys);
  CHECK(ct.level == b.params().levels());
  check_close(b.decrypt(ct, keys), values, values.size(), 1e-3);

  SECTION("the encode/decode pair is consistent on its own") {
    auto pt = b.encode(values, 2);
    check_close(b.decode(pt), values, values.size(), 1e-6);
  }
  SECTION("decryption needs only the secret row of the key set") {
    he::CkksBackend::KeySet sk_only;
    sk_only.secret = keys.secret;
    check_close(b.decrypt(ct, sk_only), values, values.size(), 1e-3);
  }
}

TEST_CASE("lattice primitives agree with the exact backend") {
  he::CkksBackend ck(small_params(), 42);
  he::SimBackend sim(small_params(), 42);
  const auto steps = he::default_rotation_steps(16);
  auto ck_keys = ck.keygen(steps);
  auto sim_keys = sim.keygen(steps);

  std::mt19937_64 rng(2);
  const std::size_t w = 16;
  const auto xs = random_vec(w, rng);
  const auto ys = random_vec(w, rng);

  auto cx = ck.encrypt(xs, ck_keys);
  auto cy = ck.encrypt(ys, ck_keys);
  auto sx = sim.encrypt(xs, sim_keys);
  auto sy = sim.encrypt(ys, sim_keys);

  SECTION("add, sub, negate, plaintext operands") {
    check_close(ck.decrypt(ck.add(cx, cy), ck_keys), sim.decrypt(sim.add(sx, sy), sim_keys),
                w, 1e-4);
    check_close(ck.decrypt(ck.sub(cx, cy), ck_keys), sim.decrypt(sim.sub(sx, sy), sim_keys),
                w, 1e-4);
    check_close(ck.decrypt(ck.negate(cx), ck_keys), sim.decrypt(sim.negate(sx), sim_keys),
                w, 1e-4);
    check_close(ck.decrypt(ck.add_plain(cx, ck.encode(ys, cx.level)), ck_keys),
                sim.decrypt(sim.add_plain(sx, sim.encode(ys, sx.level)), sim_keys), w, 1e-4);
    check_close(ck.decrypt(ck.mult_plain(cx, ck.encode(ys, cx.level)), ck_keys),
                sim.decrypt(sim.mult_plain(sx, sim.encode(ys, sx.level)), sim_keys), w, 1e-4);
  }
  SECTION("relinearized product tracks level and scale like the sim") {
    auto cp = ck.mult(cx, cy, ck_keys);
    auto sp = sim.mult(sx, sy, sim_keys);
    CHECK(cp.level == sp.level);
    CHECK(cp.scale == Catch::Approx(sp.scale));
    check_close(ck.decrypt(cp, ck_keys), sim.decrypt(sp, sim_keys), w, 1e-4);
  }
  SECTION("declared rotations move slots like the sim") {
    for (int step : {1, -1, 2, -4, 8}) {
      check_close(ck.decrypt(ck.rotate(cx, step, ck_keys), ck_keys),
                  sim.decrypt(sim.rotate(sx, step, sim_keys), sim_keys),
                  ck.params().slot_count(), 1e-4);
    }
    CHECK_THROWS_AS(ck.rotate(cx, 3, ck_keys), KeyError);
  }
  SECTION("composed rotations via rotate_by") {
    for (long step : {5L, -3L, 11L}) {
      check_close(ck.decrypt(he::rotate_by(ck, cx, ck_keys, step), ck_keys),
                  sim.decrypt(he::rotate_by(sim, sx, sim_keys, step), sim_keys),
                  ck.params().slot_count(), 1e-4);
    }
  }
  SECTION("mod switch preserves the payload") {
    auto low = ck.mod_switch(cx, 1);
    CHECK(low.level == 1);
    check_close(ck.decrypt(low, ck_keys), xs, w, 1e-3);
  }
  SECTION("level bookkeeping rejects the same misuses as the sim") {
    auto low = ck.mod_switch(cx, 1);
    CHECK_THROWS_AS(ck.add(cx, low), AlignmentError);
    CHECK_THROWS_AS(ck.mod_switch(low, 2), DepthExhaustedError);
    auto floor0 = ck.mod_switch(cx, 0);
    CHECK_THROWS_AS(ck.mult(floor0, floor0, ck_keys), DepthExhaustedError);
  }
}

TEST_CASE("depth-four circuits agree across backends within noise") {
  he::CkksBackend ck(small_params(), 17);
  he::SimBackend sim(small_params(), 17);
  const auto steps = he::default_rotation_steps(8);
  auto ck_keys = ck.keygen(steps);
  auto sim_keys = sim.keygen(steps);

  std::mt19937_64 rng(23);
  const std::size_t w = 8;
  const auto xs = random_vec(w, rng, 1.0);

  auto run = [&](auto& backend, auto& keys) {
    auto a = backend.encrypt(xs, keys);
    auto b = backend.rotate(a, 1, keys);
    auto c = backend.mult(a, b, keys);                                    // depth 1
    c = backend.add_plain(c, backend.encode(he::block_vector(0.5, w), c.level));
    auto d = backend.mult(c, c, keys);                                    // depth 2
    d = backend.mult(d, backend.mod_switch(a, d.level), keys);            // depth 3
    d = backend.mult_plain(d, backend.encode(he::block_vector(0.25, w), d.level));  // 4
    return backend.decrypt(d, keys);
  };
  check_close(run(ck, ck_keys), run(sim, sim_keys), w, 1e-2);
  CHECK(ck.profile().mult_ct == sim.profile().mult_ct);
  CHECK(ck.profile().max_depth == sim.profile().max_depth);
}

TEST_CASE("polynomial evaluation and soft comparison on the lattice backend") {
  he::CkksBackend ck(small_params(10), 9);
  auto keys = ck.keygen({1});

  const std::vector<double> xs = {-1.5, -0.25, 0.0, 0.5, 1.25};
  auto ct = ck.encrypt(xs, keys);
  const std::vector<double> coeffs = {0.3, -0.8, 0.0, 0.5};
  auto eval_plain = [&](double x) { return 0.3 - 0.8 * x + 0.5 * x * x * x; };

  SECTION("Horner and Paterson-Stockmeyer match the plain values") {
    for (auto strat : {he::PolyStrategy::kHorner, he::PolyStrategy::kPatersonStockmeyer}) {
      auto out = ck.decrypt(he::poly_eval(ck, coeffs, ct, keys, xs.size(), strat), keys);
      for (std::size_t i = 0; i < xs.size(); ++i) {
        CHECK(out[i] == Catch::Approx(eval_plain(xs[i])).margin(1e-3));
      }
    }
  }
  SECTION("soft comparison lands on 0 / 0.5 / 1") {
    auto scores = ck.encrypt({1.0, 2.0, 3.0}, keys);
    auto v = ck.decrypt(he::aprx_cmp(ck, scores, 2.0, 1.0, 2, keys, 3), keys);
    CHECK(v[0] == Catch::Approx(0.0).margin(5e-3));
    CHECK(v[1] == Catch::Approx(0.5).margin(5e-3));
    CHECK(v[2] == Catch::Approx(1.0).margin(5e-3));
  }
}

TEST_CASE("lattice ciphertexts and key sets survive serialization") {
  he::CkksBackend b(small_params(), 31);
  auto keys = b.keygen({1, -1});
  std::mt19937_64 rng(4);
  const auto values = random_vec(8, rng);
  auto ct = b.mult(b.encrypt(values, keys), b.encrypt(he::block_vector(2.0, 8), keys), keys);

  he::BinaryWriter w;
  b.serialize(ct, w);
  b.serialize(keys, w);

  he::BinaryReader r(w.bytes());
  auto ct2 = b.deserialize_ciphertext(r);
  auto keys2 = b.deserialize_keyset(r);
  CHECK(ct2.level == ct.level);
  CHECK(b.decrypt(ct2, keys2) == b.decrypt(ct, keys));  // integer payload: bit-exact

  SECTION("a secret-only key set round-trips and still decrypts") {
    he::CkksBackend::KeySet sk;
    sk.secret = keys.secret;
    he::BinaryWriter w2;
    b.serialize(sk, w2);
    he::BinaryReader r2(w2.bytes());
    auto sk2 = b.deserialize_keyset(r2);
    CHECK(b.decrypt(ct, sk2) == b.decrypt(ct, keys));
  }
  SECTION("rotation keys still work after a round-trip") {
    auto rot = b.rotate(b.encrypt(values, keys), 1, keys2);
    check_close(b.decrypt(rot, keys2), b.decrypt(b.rotate(b.encrypt(values, keys), 1, keys), keys),
                8, 1e-6);
  }
}

TEST_CASE("keygen is deterministic in the seed") {
  he::CkksBackend a(small_params(), 8);
  he::CkksBackend b(small_params(), 8);
  he::CkksBackend c(small_params(), 9);
  auto ka = a.keygen({1});
  auto kb = b.keygen({1});
  auto kc = c.keygen({1});
  CHECK(ka.secret.data == kb.secret.data);
  CHECK(ka.pk_b.data == kb.pk_b.data);
  CHECK(ka.secret.data != kc.secret.data);

  // Cross-instance decryption with the same seed works end to end.
  auto ct = a.encrypt({1.0, 2.0, 3.0}, ka);
  check_close(b.decrypt(ct, kb), {1.0, 2.0, 3.0}, 3, 1e-4);
}

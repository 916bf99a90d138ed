#include <gtest/gtest.h>

#include <random>

#include "adrsplit/admm.hpp"
#include "adrsplit/error.hpp"
#include "adrsplit/experiment.hpp"
#include "oracles.hpp"

using namespace adrsplit;

namespace {

BlockProblem quad_problem(const std::vector<oracle::QuadBlock>& q, const Vec& b) {
  std::vector<ProxFunction> f;
  std::vector<LinearMap> L;
  for (const auto& blk : q) {
    f.push_back(ProxFunction::quadratic(blk.w, blk.c));
    L.push_back(LinearMap::dense(blk.L));
  }
  return BlockProblem(f, L, b);
}

// Three quadratic blocks in R^4 with square invertible maps.
std::vector<oracle::QuadBlock> random_blocks(std::mt19937_64& gen, int m, int dim) {
  std::vector<oracle::QuadBlock> q;
  for (int i = 0; i < m; ++i) {
    Mat l = oracle::random_matrix(gen, dim, dim, 0.5) + Mat::Identity(dim, dim);
    q.push_back({0.5 + 0.5 * i, oracle::random_vector(gen, dim), l});
  }
  return q;
}

double blocks_diff(const Blocks& a, const Blocks& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, (a[i] - b[i]).cwiseAbs().maxCoeff());
  return d;
}

// Stepsizes certified for a problem with positive moduli on every block.
std::pair<double, double> safe_steps(const BlockProblem& prob) {
  auto s = comonotone_moduli(prob);
  double smin = *std::min_element(s.begin(), s.end() - 1);
  return {smin, 1.1 * smin};
}

}  // namespace

TEST(Moduli, ClosedFormula) {
  ProxFunction q = ProxFunction::quadratic(3, 1.0);
  LinearMap two = LinearMap::scaled_identity(3, 2.0);
  BlockProblem p({q, ProxFunction::zero(3)}, {two, LinearMap::scaled_identity(3, -1.0)}, Vec::Zero(3));
  auto s = comonotone_moduli(p);
  EXPECT_DOUBLE_EQ(s[0], 0.25);
  EXPECT_EQ(s[1], 0.0);
  BlockProblem w({q, ProxFunction::mcp(3, 1.0, 1.0)}, {two, LinearMap::scaled_identity(3, -1.0)},
                 Vec::Zero(3));
  EXPECT_DOUBLE_EQ(comonotone_moduli(w)[1], -1.0);
}

TEST(Moduli, NonInvertibleLastMap) {
  Mat l = Mat::Zero(2, 2);
  l(0, 0) = 1.0;
  BlockProblem p({ProxFunction::quadratic(2, 1.0), ProxFunction::mcp(2, 1.0, 1.0)},
                 {LinearMap::identity(2), LinearMap::dense(l)}, Vec::Zero(2));
  try {
    comonotone_moduli(p);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::AssumptionViolation);
  }
}

TEST(BlockProblem, RejectsOverstatedModulus) {
  EXPECT_THROW(BlockProblem({ProxFunction::quadratic(2, 0.5), ProxFunction::zero(2)},
                            {LinearMap::identity(2), LinearMap::identity(2)}, Vec::Zero(2),
                            std::vector<double>{1.0, 0.0}),
               Error);
  EXPECT_NO_THROW(BlockProblem({ProxFunction::quadratic(2, 1.0), ProxFunction::zero(2)},
                               {LinearMap::identity(2), LinearMap::identity(2)}, Vec::Zero(2),
                               std::vector<double>{0.5, 0.0}));
}

TEST(GeneralRun, IdentityQuadraticsReachOrigin) {
  BlockProblem p({ProxFunction::quadratic(3, 1.0), ProxFunction::quadratic(3, 1.0)},
                 {LinearMap::identity(3), LinearMap::identity(3)}, Vec::Zero(3));
  AdmmInit init = zero_init(p);
  init.u = {Vec::Ones(3), -2 * Vec::Ones(3)};
  init.y = Vec::Constant(3, 0.5);
  init.s = general_s_from_special(p, make_params(1, 2, 0.5), init.u);
  AdmmOptions opts;
  opts.eps = 1e-12;
  auto r = admm_general_run(p, make_params(1.0, 2.0, 0.5), init, opts);
  EXPECT_TRUE(r.converged);
  for (const auto& u : r.u) EXPECT_LT(u.norm(), 1e-8);
  EXPECT_LT(r.y.norm(), 1e-8);
  EXPECT_LE(kkt_residual(p, r.u, r.y), 1e-8);
}

TEST(GeneralRun, ZeroIterations) {
  std::mt19937_64 gen(2);
  BlockProblem p = quad_problem(random_blocks(gen, 3, 2), Vec::Zero(2));
  AdmmInit init = zero_init(p);
  init.u[1] = Vec::Ones(2);
  init.y = Vec::Constant(2, 3.0);
  AdmmOptions opts;
  opts.max_iter = 0;
  auto r = admm_general_run(p, make_params(1, 2, 0.5), init, opts);
  EXPECT_EQ(r.iterations, 0);
  EXPECT_EQ(r.u, init.u);
  EXPECT_EQ(r.y, init.y);
  auto s = admm_special_run(p, 1.0, 1.0, init, opts);
  EXPECT_EQ(s.u, init.u);
  EXPECT_EQ(s.y, init.y);
  auto g = gs_admm_run(p, 0.5, init, opts);
  EXPECT_EQ(g.u, init.u);
  EXPECT_EQ(g.y, init.y);
}

TEST(GeneralRun, MatchesSpecialRunTrace) {
  std::mt19937_64 gen(4);
  for (int m : {2, 3, 4}) {
    BlockProblem p = quad_problem(random_blocks(gen, m, 3), oracle::random_vector(gen, 3));
    auto [g, d] = safe_steps(p);
    double lambda = 1.0 + d / g;
    AdrParams par = make_params_from_delta(g, d, (lambda - 1.0) / lambda);
    AdmmInit init = zero_init(p);
    for (auto& u : init.u) u = oracle::random_vector(gen, 3);
    init.y = oracle::random_vector(gen, 3);
    init.s = general_s_from_special(p, par, init.u);
    AdmmOptions opts;
    opts.max_iter = 200;
    opts.record_iterates = true;
    opts.run_to_max = true;
    auto a = admm_general_run(p, par, init, opts);
    auto b = admm_special_run(p, g, d, init, opts);
    ASSERT_EQ(a.u_trace.size(), b.u_trace.size());
    for (std::size_t k = 0; k < a.u_trace.size(); ++k) {
      EXPECT_LE(blocks_diff(a.u_trace[k], b.u_trace[k]), 1e-10) << "m=" << m << " k=" << k;
      EXPECT_LE(oracle::max_abs_diff(a.y_trace[k], b.y_trace[k]), 1e-10) << "m=" << m << " k=" << k;
    }
    // both dual residuals describe the same subgradient element
    for (std::size_t k = 0; k < a.history.size(); ++k)
      EXPECT_NEAR(a.history[k].dual_residual, b.history[k].dual_residual,
                  1e-9 * (1.0 + b.history[k].dual_residual));
  }
}

TEST(SpecialRun, TwoBlocksMatchTextbookAdmm) {
  std::mt19937_64 gen(6);
  for (auto [g1, g2] : {std::pair{1.0, 1.0}, std::pair{0.7, 1.3}}) {
    auto q = random_blocks(gen, 2, 4);
    Vec b = oracle::random_vector(gen, 4);
    BlockProblem p = quad_problem(q, b);
    oracle::TwoBlockAdmm ref{q[0], q[1], b, g1, g2};
    AdmmInit init = zero_init(p);
    init.u[1] = oracle::random_vector(gen, 4);
    init.y = oracle::random_vector(gen, 4);
    AdmmOptions opts;
    opts.max_iter = 200;
    opts.record_iterates = true;
    opts.run_to_max = true;
    auto r = admm_special_run(p, g1, g2, init, opts);
    oracle::TwoBlockAdmm::State s{init.u[0], init.u[1], init.y};
    for (std::size_t k = 1; k < r.u_trace.size(); ++k) {
      s = ref.step(s);
      EXPECT_LE(oracle::max_abs_diff(r.u_trace[k][0], s.u1), 1e-12);
      EXPECT_LE(oracle::max_abs_diff(r.u_trace[k][1], s.u2), 1e-12);
      EXPECT_LE(oracle::max_abs_diff(r.y_trace[k], s.y), 1e-12);
    }
  }
}

TEST(SpecialRun, ThreeBlocksReachKktOracle) {
  std::mt19937_64 gen(8);
  auto q = random_blocks(gen, 3, 3);
  Vec b = oracle::random_vector(gen, 3);
  BlockProblem p = quad_problem(q, b);
  auto [uk, yk] = oracle::quad_kkt(q, b);
  auto [g, d] = safe_steps(p);
  AdmmOptions opts;
  opts.eps = 1e-11;
  opts.max_iter = 200000;
  auto r = admm_special_run(p, g, d, zero_init(p), opts);
  ASSERT_TRUE(r.converged);
  for (int i = 0; i < 3; ++i) EXPECT_LE((r.u[i] - uk[i]).norm(), 1e-6);
  EXPECT_LE((r.y - yk).norm(), 1e-6);
  AdrParams par = make_params_from_delta(g, d, 0.5);
  AdmmInit init = zero_init(p);
  auto a = admm_general_run(p, par, init, opts);
  ASSERT_TRUE(a.converged);
  for (int i = 0; i < 3; ++i) EXPECT_LE((a.u[i] - uk[i]).norm(), 1e-6);
}

TEST(SpecialRun, FeasibilityDecaysFasterThanInverseSqrt) {
  std::mt19937_64 gen(10);
  auto q = random_blocks(gen, 3, 3);
  BlockProblem p = quad_problem(q, oracle::random_vector(gen, 3));
  auto [g, d] = safe_steps(p);
  AdmmOptions opts;
  opts.max_iter = 2000;
  opts.run_to_max = true;
  opts.eps = 0.0;
  auto r = admm_special_run(p, g, d, zero_init(p), opts);
  std::vector<double> feas;
  for (const auto& h : r.history) feas.push_back(h.primal_residual);
  EXPECT_TRUE(tail_rate_ok(feas));
  double head = 0.0, tail = 0.0;
  for (std::size_t k = 100; k < 200; ++k) head = std::max(head, std::sqrt(k + 1.0) * feas[k]);
  for (std::size_t k = 1900; k < 2000; ++k) tail = std::max(tail, std::sqrt(k + 1.0) * feas[k]);
  EXPECT_LE(tail, head);
}

TEST(SpecialRun, BlockOrderDoesNotMatter) {
  std::mt19937_64 gen(12);
  BlockProblem p = quad_problem(random_blocks(gen, 4, 2), oracle::random_vector(gen, 2));
  AdmmOptions opts;
  opts.max_iter = 50;
  opts.run_to_max = true;
  auto a = admm_special_run(p, 0.3, 0.4, zero_init(p), opts);
  opts.block_order = {2, 0, 1};
  auto b = admm_special_run(p, 0.3, 0.4, zero_init(p), opts);
  EXPECT_EQ(blocks_diff(a.u, b.u), 0.0);
  opts.block_order = {0, 0, 1};
  EXPECT_THROW(admm_special_run(p, 0.3, 0.4, zero_init(p), opts), Error);
}

TEST(SpecialRun, SubproblemFailureNamesBlock) {
  Mat l = Mat::Ones(2, 2);
  BlockProblem p({ProxFunction::quadratic(2, 1.0), ProxFunction::mcp(2, 1.0, 1.0)},
                 {LinearMap::identity(2), LinearMap::dense(l)}, Vec::Zero(2),
                 std::vector<double>{1.0, -1.0});
  try {
    admm_special_run(p, 1.0, 1.0, zero_init(p));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnsupportedSubproblem);
    EXPECT_NE(std::string(e.what()).find("block 2"), std::string::npos);
  }
}

TEST(GsAdmm, ThreeBlocksReachKktOracle) {
  std::mt19937_64 gen(14);
  auto q = random_blocks(gen, 3, 3);
  Vec b = oracle::random_vector(gen, 3);
  BlockProblem p = quad_problem(q, b);
  auto [uk, yk] = oracle::quad_kkt(q, b);
  AdmmOptions opts;
  opts.eps = 1e-11;
  opts.max_iter = 200000;
  auto r = gs_admm_run(p, 0.5, zero_init(p), opts);
  ASSERT_TRUE(r.converged);
  for (int i = 0; i < 3; ++i) EXPECT_LE((r.u[i] - uk[i]).norm(), 1e-6);
  EXPECT_LE((r.y - yk).norm(), 1e-6);
}

TEST(GsAdmm, TwoBlocksAreTextbookAdmm) {
  std::mt19937_64 gen(16);
  auto q = random_blocks(gen, 2, 3);
  Vec b = oracle::random_vector(gen, 3);
  BlockProblem p = quad_problem(q, b);
  oracle::TwoBlockAdmm ref{q[0], q[1], b, 0.9, 0.9};
  AdmmOptions opts;
  opts.max_iter = 100;
  opts.run_to_max = true;
  opts.record_iterates = true;
  auto r = gs_admm_run(p, 0.9, zero_init(p), opts);
  oracle::TwoBlockAdmm::State s{Vec::Zero(3), Vec::Zero(3), Vec::Zero(3)};
  for (std::size_t k = 1; k < r.u_trace.size(); ++k) {
    s = ref.step(s);
    EXPECT_LE(oracle::max_abs_diff(r.u_trace[k][1], s.u2), 1e-12);
    EXPECT_LE(oracle::max_abs_diff(r.y_trace[k], s.y), 1e-12);
  }
}

TEST(StoppingResidual, StationaryFeasibleStateIsZero) {
  std::mt19937_64 gen(18);
  auto q = random_blocks(gen, 3, 3);
  Vec b = oracle::random_vector(gen, 3);
  BlockProblem p = quad_problem(q, b);
  auto [uk, yk] = oracle::quad_kkt(q, b);
  ResidualInput in;
  in.u = uk;
  in.u_prev = uk;
  in.gamma = in.delta = 0.8;
  EXPECT_LE(stopping_residual(p, in), 1e-12);
}

TEST(StoppingResidual, KktPointWithUnequalStepsAndOffset) {
  // with b != 0 and gamma != delta the offset term must cancel at a KKT point
  std::mt19937_64 gen(20);
  auto q = random_blocks(gen, 3, 3);
  Vec b = 5.0 * oracle::random_vector(gen, 3);
  BlockProblem p = quad_problem(q, b);
  auto [uk, yk] = oracle::quad_kkt(q, b);
  ResidualInput in;
  in.u = uk;
  in.u_prev = uk;
  in.gamma = 0.4;
  in.delta = 1.7;
  EXPECT_LE(stopping_residual(p, in), 1e-10);
  EXPECT_LE(kkt_residual(p, uk, yk), 1e-10);
}

TEST(StoppingResidual, PureInfeasibility) {
  BlockProblem p({ProxFunction::quadratic(2, 1.0), ProxFunction::quadratic(2, 1.0)},
                 {LinearMap::identity(2), LinearMap::identity(2)}, Vec::Zero(2));
  Vec a(2);
  a << 1, 4;
  Vec c(2);
  c << 2, 0;
  ResidualInput in;
  in.u = {a, c};
  in.u_prev = in.u;
  in.gamma = in.delta = 1.0;
  auto parts = residual_parts(p, in);
  EXPECT_DOUBLE_EQ(parts.primal, 5.0);
  EXPECT_EQ(parts.dual, 0.0);
  EXPECT_DOUBLE_EQ(stopping_residual(p, in), 5.0);
}

TEST(StoppingResidual, NotReadyBeforeFirstIteration) {
  BlockProblem p({ProxFunction::quadratic(2, 1.0), ProxFunction::quadratic(2, 1.0)},
                 {LinearMap::identity(2), LinearMap::identity(2)}, Vec::Zero(2));
  ResidualInput in;
  try {
    stopping_residual(p, in);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NotReady);
  }
  in.u = {Vec::Zero(2), Vec::Zero(2)};
  EXPECT_THROW(stopping_residual(p, in), Error);
}

TEST(StoppingResidual, GsResidualUsesLaterBlocks) {
  std::mt19937_64 gen(22);
  BlockProblem p = quad_problem(random_blocks(gen, 3, 2), Vec::Zero(2));
  Blocks prev = {oracle::random_vector(gen, 2), oracle::random_vector(gen, 2), oracle::random_vector(gen, 2)};
  Blocks cur = {oracle::random_vector(gen, 2), oracle::random_vector(gen, 2), oracle::random_vector(gen, 2)};
  Blocks s = gs_dual_residuals(p, 2.0, prev, cur);
  Mat l1 = p.L[0].to_dense(), l2 = p.L[1].to_dense(), l3 = p.L[2].to_dense();
  Vec want0 = 2.0 * l1.transpose() * (l2 * (prev[1] - cur[1]) + l3 * (prev[2] - cur[2]));
  Vec want1 = 2.0 * l2.transpose() * (l3 * (prev[2] - cur[2]));
  EXPECT_LE((s[0] - want0).norm(), 1e-12);
  EXPECT_LE((s[1] - want1).norm(), 1e-12);
}

TEST(KktResidual, Cases) {
  std::mt19937_64 gen(24);
  auto q = random_blocks(gen, 3, 3);
  Vec b = oracle::random_vector(gen, 3);
  BlockProblem p = quad_problem(q, b);
  auto [uk, yk] = oracle::quad_kkt(q, b);
  EXPECT_LE(kkt_residual(p, uk, yk), 1e-10);

  BlockProblem z({ProxFunction::quadratic(2, 1.0), ProxFunction::quadratic(2, 1.0)},
                 {LinearMap::identity(2), LinearMap::identity(2)}, Vec::Zero(2));
  EXPECT_EQ(kkt_residual(z, {Vec::Zero(2), Vec::Zero(2)}, Vec::Zero(2)), 0.0);

  // saturated MCP coordinates have zero slope; only feasibility is left
  BlockProblem s({ProxFunction::zero(1), ProxFunction::mcp(1, 1.0, 1.0)},
                 {LinearMap::identity(1), LinearMap::scaled_identity(1, -1.0)}, Vec::Zero(1));
  Vec big = Vec::Constant(1, 3.0);
  EXPECT_NEAR(kkt_residual(s, {Vec::Constant(1, 1.0), big}, Vec::Zero(1)), 2.0, 1e-15);
}

TEST(Extraction, OriginForIdentityQuadratics) {
  BlockProblem p({ProxFunction::quadratic(2, 1.0), ProxFunction::quadratic(2, 1.0),
                  ProxFunction::quadratic(2, 1.0)},
                 {LinearMap::identity(2), LinearMap::identity(2), LinearMap::identity(2)}, Vec::Zero(2));
  auto k = extract_kkt_from_fixed_point(p, {Vec::Zero(2), Vec::Zero(2)}, make_params(1, 2, 0.5));
  for (const auto& u : k.u) EXPECT_EQ(u, Vec::Zero(2));
  EXPECT_EQ(k.y, Vec::Zero(2));
}

TEST(Extraction, ExactFixedPointGivesKktPoint) {
  std::mt19937_64 gen(26);
  for (int m : {2, 3}) {
    auto q = random_blocks(gen, m, 3);
    Vec b = oracle::random_vector(gen, 3);
    BlockProblem p = quad_problem(q, b);
    AdrParams par = make_params(0.6, 1.8, 0.5);
    // affine KKT operators z -> (1/w) L L^T z - L c (+ b on the last one)
    std::vector<Mat> M;
    std::vector<Vec> c;
    for (int i = 0; i < m; ++i) {
      M.push_back(q[i].L * q[i].L.transpose() / q[i].w);
      c.push_back(-q[i].L * q[i].c + (i + 1 == m ? b : Vec::Zero(3)));
    }
    oracle::AffineProductStep step{M, c, par.gamma, par.delta, par.lambda, par.mu, par.kappa, true};
    Vec xs = oracle::fixed_point(oracle::probe_affine(3 * (m - 1), step));
    Blocks xbar;
    for (int i = 0; i + 1 < m; ++i) xbar.push_back(xs.segment(3 * i, 3));
    auto k = extract_kkt_from_fixed_point(p, xbar, par);
    EXPECT_LE(kkt_residual(p, k.u, k.y), 1e-8);
    for (int i = 0; i + 1 < m; ++i)
      EXPECT_LE((k.y - (xbar[i] - par.delta * p.L[i].apply(k.u[i]))).norm(), 1e-8);
    auto [uk, yk] = oracle::quad_kkt(q, b);
    EXPECT_LE((k.y - yk).norm(), 1e-8);
  }
}

TEST(DenoiseEquivalence, GeneralAndSpecialAgree) {
  ExperimentConfig cfg;
  cfg.n = 200;
  DenoiseLayout layout = make_denoise_layout(cfg.n, cfg.N);
  DenoiseSetup st = prepare_denoise(cfg, layout, 3);
  AdmmInit init = zero_init(st.problem);
  init.s = general_s_from_special(st.problem, st.params, init.u);
  AdmmOptions opts;
  opts.max_iter = 500;
  opts.run_to_max = true;
  opts.record_iterates = true;
  auto a = admm_general_run(st.problem, st.params, init, opts);
  auto b = admm_special_run(st.problem, st.steps.gamma, st.steps.delta, init, opts);
  double worst = 0.0;
  for (std::size_t k = 0; k < a.u_trace.size(); ++k) {
    worst = std::max(worst, blocks_diff(a.u_trace[k], b.u_trace[k]));
    worst = std::max(worst, oracle::max_abs_diff(a.y_trace[k], b.y_trace[k]));
  }
  EXPECT_LE(worst, 1e-10);
}

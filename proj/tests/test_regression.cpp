#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "adaptsafe/regression.hpp"
#include "oracles.hpp"

using namespace adaptsafe;

namespace {

Sample make_sample(Mat phi, Vec y, double t = 0.0) { return {std::move(y), std::move(phi), t}; }

Sample diag_sample(double a, double b)
{
    Mat phi = Mat::Zero(2, 2);
    phi(0, 0) = a;
    phi(1, 1) = b;
    return make_sample(phi, Vec::Zero(2));
}

Prior scalar_prior() { return {Vec::Constant(1, 0.0), Mat::Constant(1, 1, 1.0)}; }

HistoryStack scalar_stack()
{
    HistoryStack stack(1, 1, 1);
    stack.record(make_sample(Mat::Constant(1, 1, 1.0), Vec::Constant(1, 1.0)));
    return stack;
}

EstimatorState run_to(const Prior& prior, const HistoryStack& stack, double t, double dt, PropagationMode mode)
{
    EstimatorState s = EstimatorState::initial(prior);
    const int steps = static_cast<int>(std::lround(t / dt));
    for (int i = 0; i < steps; ++i) s = propagate(s, stack, dt, mode);
    return s;
}

} // namespace

TEST(HistoryStack, AppendsBelowCapacity)
{
    HistoryStack stack(20, 2, 2);
    const auto out = stack.record(diag_sample(1.0, 0.5));
    EXPECT_EQ(out.kind, RecordKind::Appended);
    EXPECT_EQ(out.slot, 0u);
    EXPECT_EQ(stack.size(), 1u);
}

TEST(HistoryStack, RejectsDimensionMismatchAndNonFinite)
{
    HistoryStack stack(3, 2, 2);
    EXPECT_THROW(stack.record(make_sample(Mat::Zero(2, 3), Vec::Zero(2))), std::invalid_argument);
    EXPECT_THROW(stack.record(make_sample(Mat::Zero(2, 2), Vec::Zero(3))), std::invalid_argument);
    Sample bad = diag_sample(1.0, 1.0);
    bad.y(0) = std::nan("");
    EXPECT_THROW(stack.record(bad), std::invalid_argument);
    EXPECT_EQ(stack.size(), 0u);
    EXPECT_THROW(HistoryStack(0, 2, 2), std::invalid_argument);
}

TEST(HistoryStack, DuplicateRegressorIsRejectedWhenFull)
{
    HistoryStack stack(3, 2, 2);
    stack.record(diag_sample(1.0, 0.0));
    stack.record(diag_sample(0.0, 1.0));
    stack.record(diag_sample(1.0, 1.0));
    const double before = stack.lambda_min();
    // Brute force: every single-slot swap with a copy of slot 2 leaves lambda_min no larger.
    for (std::size_t j = 0; j < 3; ++j) {
        Mat trial = stack.recomputed_info();
        trial -= stack.slots()[j].phi.transpose() * stack.slots()[j].phi;
        trial += stack.slots()[2].phi.transpose() * stack.slots()[2].phi;
        EXPECT_LE(oracle::lambda_min_2x2(trial(0, 0), trial(0, 1), trial(1, 1)), before + 1e-12);
    }
    EXPECT_EQ(stack.record(diag_sample(1.0, 1.0)).kind, RecordKind::Rejected);
    EXPECT_DOUBLE_EQ(stack.lambda_min(), before);
}

TEST(HistoryStack, MissingDirectionReplacesBruteForceArgmax)
{
    HistoryStack stack(3, 2, 2);
    stack.record(diag_sample(1.0, 0.0));
    stack.record(diag_sample(2.0, 0.0));
    stack.record(diag_sample(0.5, 0.0));
    EXPECT_EQ(stack.lambda_min(), 0.0);

    const Sample candidate = diag_sample(0.0, 1.0);
    double best = -1.0;
    std::size_t best_slot = 0;
    for (std::size_t j = 0; j < 3; ++j) {
        Mat trial = stack.recomputed_info();
        trial -= stack.slots()[j].phi.transpose() * stack.slots()[j].phi;
        trial += candidate.phi.transpose() * candidate.phi;
        const double v = oracle::lambda_min_2x2(trial(0, 0), trial(0, 1), trial(1, 1));
        if (v > best) {
            best = v;
            best_slot = j;
        }
    }
    const auto out = stack.record(candidate);
    EXPECT_EQ(out.kind, RecordKind::Replaced);
    EXPECT_EQ(out.slot, best_slot);
    EXPECT_NEAR(stack.lambda_min(), best, 1e-12);
    EXPECT_GT(stack.lambda_min(), 0.0);
}

TEST(HistoryStack, CachesMatchRecomputationAndLambdaNeverDrops)
{
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        HistoryStack stack(5, 3, 2, 0.0);
        double last = 0.0;
        for (int k = 0; k < 200; ++k) {
            stack.record(make_sample(oracle::random_matrix(3, 2, 1.0, rng), oracle::random_matrix(3, 1, 1.0, rng)));
            const double now = stack.lambda_min();
            if (stack.full() && last > 0.0) EXPECT_GE(now, last - 1e-12);
            last = now;
        }
        EXPECT_LT((stack.info_matrix() - stack.recomputed_info()).norm(), 1e-10);
        EXPECT_LT((stack.target_moment() - stack.recomputed_moment()).norm(), 1e-10);
    }
}

TEST(Excitation, EmptyStackIsNotExcited)
{
    HistoryStack stack(20, 2, 2);
    const auto r = excitation(stack);
    EXPECT_EQ(r.lambda_min, 0.0);
    EXPECT_FALSE(r.satisfied);
}

TEST(Excitation, SingleDirectionIsRankDeficient)
{
    HistoryStack stack(4, 2, 2);
    stack.record(diag_sample(1.0, 0.0));
    stack.record(diag_sample(3.0, 0.0));
    const auto r = excitation(stack);
    EXPECT_NEAR(r.lambda_min, 0.0, 1e-15);
    EXPECT_FALSE(r.satisfied);
}

TEST(Excitation, IdentityInformationGivesUnitLambda)
{
    HistoryStack stack(2, 2, 2);
    stack.record(diag_sample(1.0, 0.0));
    stack.record(diag_sample(0.0, 1.0));
    const auto r = excitation(stack);
    EXPECT_NEAR(r.lambda_min, 1.0, 1e-15);
    EXPECT_TRUE(r.satisfied);
}

TEST(Excitation, MonitorLatchesFirstTime)
{
    HistoryStack stack(3, 2, 2);
    ExcitationMonitor monitor;
    EXPECT_FALSE(monitor.update(stack, 0.0).first_satisfied_at);
    stack.record(diag_sample(1.0, 0.0));
    EXPECT_FALSE(monitor.update(stack, 0.5).satisfied);
    stack.record(diag_sample(0.0, 1.0));
    EXPECT_EQ(*monitor.update(stack, 1.0).first_satisfied_at, 1.0);
    EXPECT_EQ(*monitor.update(stack, 2.0).first_satisfied_at, 1.0);
    EXPECT_THROW(ExcitationMonitor(0.0), std::invalid_argument);
}

TEST(Prior, RejectsInvalidCovariance)
{
    Prior p{Vec::Zero(2), Mat::Identity(2, 2)};
    EXPECT_NO_THROW(p.validate());
    p.sigma0(0, 1) = 0.5;
    EXPECT_THROW(p.validate(), std::invalid_argument);
    p.sigma0 = -Mat::Identity(2, 2);
    EXPECT_THROW(p.validate(), std::invalid_argument);
    p.sigma0 = Mat::Identity(3, 3);
    EXPECT_THROW(p.validate(), std::invalid_argument);
}

TEST(Propagate, EmptyStackLeavesEstimateUnchanged)
{
    const Prior prior{(Vec(2) << -0.1, 0.1).finished(), 2.0 * Mat::Identity(2, 2)};
    HistoryStack stack(20, 2, 2);
    for (auto mode : {PropagationMode::Information, PropagationMode::Ode}) {
        const auto s = run_to(prior, stack, 1.0, 0.01, mode);
        EXPECT_LT((s.theta_hat - prior.theta_bar0).norm(), 1e-15);
        EXPECT_LT((s.gamma - prior.sigma0).norm(), 1e-15);
    }
}

TEST(Propagate, ScalarInstanceMatchesAnalyticSolution)
{
    const auto stack = scalar_stack();
    for (auto mode : {PropagationMode::Information, PropagationMode::Ode}) {
        for (double t : {0.5, 1.0, 2.0, 5.0}) {
            const auto s = run_to(scalar_prior(), stack, t, 1e-3, mode);
            const auto ref = oracle::scalar_rls(0.0, 1.0, 1.0, 1.0, t);
            EXPECT_NEAR(s.theta_hat(0), ref.theta, 1e-9) << "t=" << t;
            EXPECT_NEAR(s.gamma(0, 0), ref.gamma, 1e-9) << "t=" << t;
        }
    }
    const auto s = run_to(scalar_prior(), stack, 1.0, 1e-3, PropagationMode::Information);
    EXPECT_NEAR(s.theta_hat(0), 0.5, 1e-12);
    EXPECT_NEAR(s.gamma(0, 0), 0.5, 1e-12);
}

TEST(Propagate, StateInvariantsHold)
{
    std::mt19937_64 rng(3);
    HistoryStack stack(4, 2, 3);
    for (int i = 0; i < 4; ++i)
        stack.record(make_sample(oracle::random_matrix(2, 3, 1.0, rng), oracle::random_matrix(2, 1, 1.0, rng)));
    const Prior prior{Vec::Zero(3), oracle::random_spd(3, 0.5, 2.0, rng)};
    EstimatorState s = EstimatorState::initial(prior);
    double last_max = lambda_max(s.gamma);
    for (int k = 0; k < 500; ++k) {
        s = propagate(s, stack, 0.01, PropagationMode::Ode);
        EXPECT_LT((s.gamma * s.info - Mat::Identity(3, 3)).norm(), 1e-6);
        EXPECT_LE(lambda_max(s.gamma), last_max + 1e-12);
        EXPECT_GE(lambda_min(Mat(prior.sigma0 - s.gamma)), -1e-9);
        last_max = lambda_max(s.gamma);
    }
}

TEST(Propagate, CoarseOdeStepLosesDefinitenessAndThrows)
{
    HistoryStack stack(1, 1, 1);
    stack.record(make_sample(Mat::Constant(1, 1, 10.0), Vec::Constant(1, 0.0)));
    const auto s0 = EstimatorState::initial(scalar_prior());
    EXPECT_THROW(propagate(s0, stack, 1.0, PropagationMode::Ode), std::runtime_error);
    EXPECT_NO_THROW(propagate(s0, stack, 1.0, PropagationMode::Information));
    EXPECT_THROW(propagate(s0, stack, 0.0), std::invalid_argument);
}

TEST(ClosedForm, NoDataReturnsPrior)
{
    const Prior prior{(Vec(2) << -0.1, 0.1).finished(), 2.0 * Mat::Identity(2, 2)};
    const auto out = solve_closed_form(prior, Mat::Zero(2, 2), prior.sigma0_inv() * prior.theta_bar0);
    EXPECT_LT((out.theta_hat - prior.theta_bar0).norm(), 1e-15);
    EXPECT_LT((out.gamma - prior.sigma0).norm(), 1e-15);
}

TEST(ClosedForm, ScalarAtOneSecond)
{
    const auto out = solve_closed_form(scalar_prior(), Mat::Constant(1, 1, 1.0), Vec::Constant(1, 1.0));
    EXPECT_DOUBLE_EQ(out.theta_hat(0), 0.5);
    EXPECT_DOUBLE_EQ(out.gamma(0, 0), 0.5);
}

TEST(ClosedForm, AgreesWithOdePropagationOnRandomHistory)
{
    std::mt19937_64 rng(11);
    HistoryStack stack(6, 3, 2);
    for (int i = 0; i < 6; ++i)
        stack.record(make_sample(oracle::random_matrix(3, 2, 1.0, rng), oracle::random_matrix(3, 1, 1.0, rng)));
    const Prior prior{oracle::random_matrix(2, 1, 1.0, rng), oracle::random_spd(2, 0.5, 3.0, rng)};
    const auto s = run_to(prior, stack, 2.0, 1e-3, PropagationMode::Ode);
    const auto cf = solve_closed_form(prior, 2.0 * stack.info_matrix(),
                                      prior.sigma0_inv() * prior.theta_bar0 + 2.0 * stack.target_moment());
    EXPECT_LT((s.theta_hat - cf.theta_hat).norm() / cf.theta_hat.norm(), 1e-6);
    EXPECT_LT((s.gamma - cf.gamma).norm() / cf.gamma.norm(), 1e-6);
}

TEST(ErrorTransform, ScalarExampleAndInitialTime)
{
    const auto prior = scalar_prior();
    const Vec truth = Vec::Constant(1, 1.0);
    const auto e0 = error_transform(EstimatorState::initial(prior), prior, truth);
    EXPECT_DOUBLE_EQ(e0.predicted(0), 1.0);
    EXPECT_DOUBLE_EQ(e0.actual(0), 1.0);

    const auto s = run_to(prior, scalar_stack(), 1.0, 1e-3, PropagationMode::Information);
    const auto e1 = error_transform(s, prior, truth);
    EXPECT_NEAR(e1.actual(0), 0.5, 1e-12);
    EXPECT_NEAR(e1.predicted(0), 0.5, 1e-12);
}

TEST(StackCsv, HeaderAndRows)
{
    HistoryStack stack(2, 2, 2);
    Sample s = diag_sample(1.0, 2.0);
    s.y << 3.0, 4.0;
    s.t = 0.5;
    stack.record(s);
    std::ostringstream os;
    write_stack_csv(os, stack);
    EXPECT_EQ(os.str(), "t,slot,y_1,y_2,phi_1_1,phi_1_2,phi_2_1,phi_2_2\n0.5,0,3,4,1,0,0,2\n");
}

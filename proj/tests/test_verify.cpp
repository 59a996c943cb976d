#include <doctest.h>

#include "oscnet/verify.hpp"

using namespace oscnet;

TEST_CASE("verify suite catches an injected surrogate fault") {
    const auto good = run_verify_suites(NeuronParams{}, {"surrogate_peak"});
    REQUIRE(good.size() == 1);
    CHECK(good[0].pass);

    NeuronParams flipped;
    flipped.alpha = -3.0; // sign-flipped surrogate sharpness
    const auto bad = run_verify_suites(flipped, {"surrogate_peak", "spike_train_loss_values"});
    REQUIRE(bad.size() == 2);
    CHECK_FALSE(bad[0].pass);
    CHECK(bad[1].pass); // unrelated suites stay green
}

TEST_CASE("neuron params validation") {
    NeuronParams p;
    p.v_reset = 2.0; // above threshold
    CHECK_THROWS_AS(p.validate(), InvalidParamError);
    NeuronParams q;
    q.noise_lo = 0.5;
    q.noise_hi = -0.5;
    CHECK_THROWS_AS(q.validate(), InvalidParamError);
    NeuronParams r;
    r.alpha = 0.0;
    CHECK_THROWS_AS(r.validate(), InvalidParamError);
}

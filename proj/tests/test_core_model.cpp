#include <cmath>
#include <random>

#include "doctest.h"
#include "tqd/trace.hpp"

using namespace tqd;

namespace {

BitsPerSecond mbps(double v) { return BitsPerSecond(v * 1e6); }

// Midpoint Riemann sum over capacity_at, independent of the closed form.
double riemann(const CapacityTrace& trace, double t0, double t1, int n)
{
    const double h = (t1 - t0) / n;
    double sum = 0.0;
    for (int i = 0; i < n; ++i)
        sum += trace.capacity_at(Seconds(t0 + (i + 0.5) * h)).value() * h;
    return sum;
}

CapacityTrace random_trace(std::mt19937_64& rng)
{
    std::uniform_int_distribution<int> count(1, 8);
    std::uniform_real_distribution<double> gap(0.01, 2.0);
    std::uniform_real_distribution<double> rate(1e5, 1e9);
    std::bernoulli_distribution linear(0.5);
    std::vector<Breakpoint> bps;
    double t = 0.0;
    const int n = count(rng);
    for (int i = 0; i < n; ++i) {
        const bool lin = linear(rng) && i + 1 < n;
        bps.push_back({Seconds(t), BitsPerSecond(rate(rng)), lin ? SegmentMode::linear : SegmentMode::hold});
        t += gap(rng);
    }
    return CapacityTrace(std::move(bps), Seconds(t));
}

} // namespace

TEST_CASE("step trace construction and evaluation")
{
    const auto trace = make_step_trace(mbps(100), mbps(10), Seconds(1.0), Seconds(5.0));
    CHECK(trace.capacity_at(Seconds(0.0)).value() == 100e6);
    CHECK(trace.capacity_at(Seconds(std::nextafter(1.0, 0.0))).value() == 100e6);
    CHECK(trace.capacity_at(Seconds(1.0)).value() == 10e6);
    CHECK(trace.capacity_at(Seconds(5.0)).value() == 10e6);

    const auto events = detect_events(trace);
    REQUIRE(events.size() == 1);
    CHECK(events[0].onset.value() == 1.0);
    CHECK(events[0].c_factor() == 10.0);
    CHECK(events[0].ramp_duration.value() == 0.0);
}

TEST_CASE("step trace rejects non-reductions and bad onsets")
{
    CHECK_THROWS_AS(make_step_trace(mbps(100), mbps(100), Seconds(1.0), Seconds(5.0)), InvalidArgument);
    CHECK_THROWS_AS(make_step_trace(mbps(10), mbps(100), Seconds(1.0), Seconds(5.0)), InvalidArgument);
    CHECK_THROWS_AS(make_step_trace(mbps(100), mbps(10), Seconds(0.0), Seconds(5.0)), InvalidArgument);
    CHECK_THROWS_AS(make_step_trace(mbps(100), mbps(10), Seconds(5.0), Seconds(5.0)), InvalidArgument);
}

TEST_CASE("zero and negative rates are rejected")
{
    CHECK_THROWS_AS(BitsPerSecond(0.0), InvalidArgument);
    CHECK_THROWS_AS(BitsPerSecond(-1.0), InvalidArgument);
    CHECK_THROWS_AS(Seconds(-0.5), InvalidArgument);
    CHECK_THROWS_AS(Seconds(std::nan("")), InvalidArgument);
}

TEST_CASE("ramp trace")
{
    const auto trace = make_ramp_trace(mbps(100), mbps(10), Seconds(1.0), Seconds(0.1), Seconds(5.0));
    CHECK(trace.capacity_at(Seconds(1.0)).value() == 100e6);
    CHECK(trace.capacity_at(Seconds(1.05)).value() == doctest::Approx(55e6).epsilon(1e-12));
    CHECK(trace.capacity_at(Seconds(1.1)).value() == 10e6);

    const auto events = detect_events(trace);
    REQUIRE(events.size() == 1);
    CHECK(events[0].onset.value() == 1.0);
    CHECK(events[0].c_factor() == doctest::Approx(10.0).epsilon(1e-12));
    CHECK(events[0].ramp_duration.value() == doctest::Approx(0.1).epsilon(1e-12));

    SUBCASE("zero ramp degenerates to a step")
    {
        const auto ramp0 = make_ramp_trace(mbps(100), mbps(10), Seconds(1.0), Seconds(0.0), Seconds(5.0));
        CHECK(ramp0 == make_step_trace(mbps(100), mbps(10), Seconds(1.0), Seconds(5.0)));
    }
    SUBCASE("ramp past the horizon")
    {
        CHECK_THROWS_AS(make_ramp_trace(mbps(100), mbps(10), Seconds(4.0), Seconds(2.0), Seconds(5.0)),
                        InvalidArgument);
    }
}

TEST_CASE("capacity_at domain and MCS levels")
{
    const CapacityTrace mcs({{Seconds(0.0), mbps(144.4), SegmentMode::hold},
                             {Seconds(1.0), mbps(14.4), SegmentMode::hold},
                             {Seconds(2.0), mbps(144.4), SegmentMode::hold}},
                            Seconds(3.0));
    CHECK(mcs.capacity_at(Seconds(1.5)).value() == 14.4e6);
    CHECK_THROWS_AS(mcs.capacity_at(Seconds(3.5)), InvalidArgument);
    CHECK(detect_events(mcs).size() == 1);
}

TEST_CASE("integrate_capacity closed forms")
{
    const CapacityTrace flat({{Seconds(0.0), mbps(10), SegmentMode::hold}}, Seconds(2.0));
    CHECK(integrate_capacity(flat, Seconds(0.5), Seconds(0.5)).value() == 0.0);
    CHECK(integrate_capacity(flat, Seconds(0.0), Seconds(1.0)).value() == 1e7);

    const CapacityTrace ramp({{Seconds(0.0), mbps(100), SegmentMode::linear},
                              {Seconds(1.0), mbps(10), SegmentMode::hold}},
                             Seconds(1.0));
    const double exact = integrate_capacity(ramp, Seconds(0.0), Seconds(1.0)).value();
    CHECK(exact == doctest::Approx(55e6).epsilon(1e-15));
    CHECK(riemann(ramp, 0.0, 1.0, 100000) == doctest::Approx(exact).epsilon(1e-9));

    CHECK_THROWS_AS(integrate_capacity(flat, Seconds(1.0), Seconds(0.5)), InvalidArgument);
    CHECK_THROWS_AS(integrate_capacity(flat, Seconds(1.0), Seconds(3.0)), InvalidArgument);
}

TEST_CASE("integration is additive and matches a Riemann sum on random traces")
{
    std::mt19937_64 rng(7);
    for (int iter = 0; iter < 200; ++iter) {
        const auto trace = random_trace(rng);
        const double h = trace.horizon().value();
        std::uniform_real_distribution<double> u(0.0, h);
        double a = u(rng), b = u(rng), c = u(rng);
        if (a > b)
            std::swap(a, b);
        if (b > c)
            std::swap(b, c);
        if (a > b)
            std::swap(a, b);
        const double whole = trace.integrate(Seconds(a), Seconds(c)).value();
        const double parts = trace.integrate(Seconds(a), Seconds(b)).value()
                             + trace.integrate(Seconds(b), Seconds(c)).value();
        CHECK(parts == doctest::Approx(whole).epsilon(1e-12));
        if (iter % 20 == 0)
            CHECK(riemann(trace, 0.0, h, 200000) == doctest::Approx(trace.integrate(Seconds(0.0), Seconds(h)).value()).epsilon(1e-4));
    }
}

TEST_CASE("linear breakpoints evaluate to their rates exactly")
{
    std::mt19937_64 rng(11);
    for (int iter = 0; iter < 100; ++iter) {
        const auto trace = random_trace(rng);
        for (const auto& b : trace.breakpoints())
            CHECK(trace.capacity_at(b.time) == b.rate);
    }
}

TEST_CASE("detect_events")
{
    SUBCASE("increasing trace has no events")
    {
        const CapacityTrace up({{Seconds(0.0), mbps(10), SegmentMode::linear},
                                {Seconds(1.0), mbps(50), SegmentMode::hold},
                                {Seconds(2.0), mbps(100), SegmentMode::hold}},
                               Seconds(3.0));
        CHECK(detect_events(up).empty());
    }
    SUBCASE("ramp down then step up")
    {
        const CapacityTrace t({{Seconds(0.0), mbps(100), SegmentMode::hold},
                               {Seconds(1.0), mbps(100), SegmentMode::linear},
                               {Seconds(1.1), mbps(10), SegmentMode::hold},
                               {Seconds(2.0), mbps(100), SegmentMode::hold}},
                              Seconds(3.0));
        const auto events = detect_events(t);
        REQUIRE(events.size() == 1);
        CHECK(events[0].onset.value() == 1.0);
        CHECK(events[0].c_factor() == doctest::Approx(10.0).epsilon(1e-12));
        CHECK(events[0].ramp_duration.value() == doctest::Approx(0.1).epsilon(1e-12));
    }
    SUBCASE("plateau separates events")
    {
        const CapacityTrace t({{Seconds(0.0), mbps(100), SegmentMode::hold},
                               {Seconds(1.0), mbps(50), SegmentMode::hold},
                               {Seconds(2.0), mbps(10), SegmentMode::hold}},
                              Seconds(3.0));
        const auto events = detect_events(t);
        REQUIRE(events.size() == 2);
        CHECK(events[0].c_factor() == 2.0);
        CHECK(events[1].c_factor() == 5.0);
    }
    SUBCASE("step followed directly by a ramp is one run")
    {
        const CapacityTrace t({{Seconds(0.0), mbps(100), SegmentMode::hold},
                               {Seconds(1.0), mbps(50), SegmentMode::linear},
                               {Seconds(1.5), mbps(10), SegmentMode::hold}},
                              Seconds(3.0));
        const auto events = detect_events(t);
        REQUIRE(events.size() == 1);
        CHECK(events[0].pre_rate.value() == 100e6);
        CHECK(events[0].post_rate.value() == 10e6);
        CHECK(events[0].ramp_duration.value() == 0.5);
    }
}

TEST_CASE("construction recovers event parameters")
{
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> rate(1e6, 1e9), c(1.01, 1000.0), ramp(0.0, 2.0);
    for (int i = 0; i < 200; ++i) {
        const double pre = rate(rng);
        const double cf = c(rng);
        const double r = i % 3 == 0 ? 0.0 : ramp(rng);
        const auto trace = make_ramp_trace(BitsPerSecond(pre), BitsPerSecond(pre / cf), Seconds(0.5),
                                           Seconds(r), Seconds(5.0));
        const auto events = detect_events(trace);
        REQUIRE(events.size() == 1);
        CHECK(std::fabs(events[0].c_factor() - cf) / cf < 1e-12);
        CHECK(events[0].ramp_duration.value() == doctest::Approx(r).epsilon(1e-12));
    }
}

TEST_CASE("trace CSV")
{
    SUBCASE("parse with explicit horizon gives the step trace")
    {
        const auto t = trace_from_csv("0,100000000,hold\n1,10000000,hold\n", Seconds(5.0));
        CHECK(t == make_step_trace(mbps(100), mbps(10), Seconds(1.0), Seconds(5.0)));
    }
    SUBCASE("header and scientific notation")
    {
        const auto t = trace_from_csv("time_s,rate_bps,mode\n0,1e8,linear\n2,1.5e7,hold\n");
        CHECK(t.horizon().value() == 2.0);
        CHECK(t.capacity_at(Seconds(1.0)).value() == doctest::Approx(57.5e6));
    }
    SUBCASE("errors carry line numbers")
    {
        auto line_of = [](std::string_view text) {
            try {
                trace_from_csv(text);
            } catch (const ParseError& e) {
                return e.line();
            }
            return std::size_t{0};
        };
        CHECK(line_of("0,100,hold\n1,-5,hold\n") == 2);
        CHECK(line_of("0,100,hold\n2,50,hold\n1,10,hold\n") == 3);
        CHECK(line_of("0,100,hold\n1,50,ramp\n") == 2);
        CHECK(line_of("0,1x0,hold\n") == 1);
        CHECK(line_of("time_s,rate_bps,mode\n1,100,hold\n") == 2);
        CHECK(line_of("0,100\n") == 1);
        CHECK(line_of("0,0,hold\n1,10,hold\n") == 1);
        CHECK_THROWS_AS(trace_from_csv(""), ParseError);
        CHECK_THROWS_AS(trace_from_csv("0,100,hold\n1,10,hold\n", Seconds(0.5)), ParseError);
    }
    SUBCASE("canonical round trip on random traces")
    {
        std::mt19937_64 rng(5);
        for (int i = 0; i < 200; ++i) {
            const auto trace = random_trace(rng);
            const auto text = trace_to_csv(trace);
            const auto back = trace_from_csv(text);
            CHECK(back == trace);
            CHECK(trace_to_csv(back) == text);
        }
    }
    SUBCASE("canonical step output")
    {
        const auto t = make_step_trace(mbps(100), mbps(10), Seconds(1.0), Seconds(5.0));
        CHECK(trace_to_csv(t) == "time_s,rate_bps,mode\n0,100000000,hold\n1,10000000,hold\n5,10000000,hold\n");
    }
}

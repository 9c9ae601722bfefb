#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <sstream>

#include "rydberg/config.hpp"
#include "rydberg/fixtures.hpp"
#include "rydberg/params.hpp"

using namespace rydberg;

namespace {

std::string base_text() { return fixtures::operating_point_150s_text(); }

std::string without_key(const std::string &text, const std::string &key) {
    std::istringstream in(text);
    std::string line, out;
    while (std::getline(in, line)) {
        if (line.rfind(key + " ", 0) != 0) {
            out += line + "\n";
        }
    }
    return out;
}

std::string expect_validation_key(const std::string &text, const std::vector<std::string> &overrides = {}) {
    try {
        parse_config_text(text, overrides);
    } catch (const ValidationError &e) {
        return e.key();
    }
    ADD_FAILURE() << "no ValidationError";
    return {};
}

}  // namespace

TEST(Units, LabConversionsUseTwoPi) {
    EXPECT_DOUBLE_EQ(units::mhz_to_rad(1.0), 2.0 * M_PI * 1e6);
    EXPECT_DOUBLE_EQ(units::rad_to_mhz(units::mhz_to_rad(30.0)), 30.0);
    EXPECT_DOUBLE_EQ(units::ghz_to_rad(1.0), 1e3 * units::mhz_to_rad(1.0));
    EXPECT_DOUBLE_EQ(units::us_to_s(860.0), 860e-6);
    EXPECT_DOUBLE_EQ(units::uk_to_k(60.0), 60e-6);
}

TEST(Constants, PositiveCodata) {
    EXPECT_GT(PhysicalConstants::hbar, 0.0);
    EXPECT_GT(PhysicalConstants::k_B, 0.0);
    EXPECT_GT(PhysicalConstants::mu_B, 0.0);
    EXPECT_NEAR(PhysicalConstants::hbar, 1.054571817e-34, 1e-43);
    EXPECT_NEAR(PhysicalConstants::k_B, 1.380649e-23, 1e-32);
    EXPECT_NEAR(PhysicalConstants::mu_B, 9.2740100783e-24, 1e-33);
}

TEST(LandeG, Values) {
    EXPECT_DOUBLE_EQ(lande_g(0, 0.5), 2.0);
    EXPECT_NEAR(lande_g(2, 2.5), 1.2, 1e-15);
    EXPECT_NEAR(lande_g(1, 0.5), 2.0 / 3.0, 1e-15);
    // 97d5/2, m_j = 5/2 against the clock state.
    EXPECT_NEAR(lande_g(2, 2.5) * 2.5, 3.0, 1e-14);
}

TEST(LandeG, RejectsInvalidJ) {
    EXPECT_THROW(lande_g(0, 1.5), ValidationError);
    EXPECT_THROW(lande_g(2, 0.5), ValidationError);
    EXPECT_THROW(lande_g(-1, 0.5), ValidationError);
}

TEST(TwoPhotonWavenumber, Geometries) {
    const double k480 = 2.0 * M_PI / 480e-9, k780 = 2.0 * M_PI / 780e-9;
    const double co = two_photon_wavenumber(480e-9, 780e-9, BeamGeometry::co_propagating);
    const double counter = two_photon_wavenumber(480e-9, 780e-9, BeamGeometry::counter_propagating);
    EXPECT_NEAR(co, k480 - k780, 1e-6);
    EXPECT_NEAR(counter, k480 + k780, 1e-6);
    EXPECT_NEAR(co, 5.03e6, 0.005e6);
    EXPECT_NEAR(counter, 2.11e7, 0.005e7);
    EXPECT_EQ(two_photon_wavenumber(780e-9, 780e-9, BeamGeometry::co_propagating), 0.0);
    EXPECT_THROW(two_photon_wavenumber(0.0, 780e-9, BeamGeometry::co_propagating), ValidationError);
    EXPECT_THROW(two_photon_wavenumber(480e-9, -1.0, BeamGeometry::co_propagating), ValidationError);
}

TEST(Lifetimes, TableOnlyForRbNs) {
    EXPECT_DOUBLE_EQ(*tabulated_lifetime("Rb87", 75, 0, 0.5), 180e-6);
    EXPECT_DOUBLE_EQ(*tabulated_lifetime("Rb87", 100, 0, 0.5), 340e-6);
    EXPECT_DOUBLE_EQ(*tabulated_lifetime("Rb87", 125, 0, 0.5), 570e-6);
    EXPECT_DOUBLE_EQ(*tabulated_lifetime("Rb87", 150, 0, 0.5), 860e-6);
    EXPECT_FALSE(tabulated_lifetime("Rb87", 97, 2, 2.5));
    EXPECT_FALSE(tabulated_lifetime("Rb87", 151, 0, 0.5));
}

TEST(Config, OperatingPointDerivedValues) {
    const auto cfg = fixtures::operating_point_150s();
    EXPECT_DOUBLE_EQ(cfg.level.tau, 860e-6);
    EXPECT_TRUE(cfg.is_defaulted("level.tau_us"));
    EXPECT_DOUBLE_EQ(cfg.level.g_R, 2.0);
    EXPECT_DOUBLE_EQ(cfg.laser.rabi, 2.0 * M_PI * 30e6);
    EXPECT_DOUBLE_EQ(cfg.laser.gamma_p, 1.0 / 125e-9);
    // Omega_1 defaults to sqrt(2 |Delta| Omega).
    EXPECT_NEAR(cfg.laser.rabi_single, std::sqrt(2.0 * 2.0 * M_PI * 20e9 * 2.0 * M_PI * 30e6), 1.0);
    EXPECT_NEAR(cfg.k_2nu(), 2.0 * M_PI * (1.0 / 422e-9 - 1.0 / 1004e-9), 1e-3);
    EXPECT_NEAR(cfg.blockade_shift() / (2.0 * M_PI * 2.3e9), 1.0, 1e-12);
    EXPECT_DOUBLE_EQ(cfg.separation, 5e-6);
    EXPECT_FALSE(cfg.environment.gap_time.has_value());
    EXPECT_NEAR(cfg.gap_time(), 1.0 / 30e6, 1e-18);
}

TEST(Config, TauDefaultFollowsLevelOverride) {
    const auto cfg = fixtures::operating_point_150s({"level.n=100"});
    EXPECT_DOUBLE_EQ(cfg.level.tau, 340e-6);
}

TEST(Config, TauRequiredOutsideTable) {
    EXPECT_EQ(expect_validation_key(base_text(), {"level.n=97"}), "level.tau_us");
    const auto cfg = fixtures::operating_point_150s({"level.n=97", "level.tau_us=300"});
    EXPECT_DOUBLE_EQ(cfg.level.tau, 300e-6);
}

TEST(Config, ErrorsNameTheKey) {
    EXPECT_NE(expect_validation_key(base_text(), {"environment.sigma_T=-1"}).find("sigma"), std::string::npos);
    EXPECT_EQ(expect_validation_key(base_text(), {"environment.temperature_uK=-5"}), "environment.temperature_uK");
    EXPECT_EQ(expect_validation_key(base_text(), {"laser.rabi_mhz=0"}), "laser.rabi_mhz");
    EXPECT_EQ(expect_validation_key(base_text(), {"laser.rabi_mhz=fast"}), "laser.rabi_mhz");
    EXPECT_EQ(expect_validation_key(base_text(), {"level.j=1.5"}), "level.j");
    EXPECT_EQ(expect_validation_key(base_text(), {"level.m_j=0.7"}), "level.m_j");
    EXPECT_EQ(expect_validation_key(base_text(), {"laser.geometry=sideways"}), "laser.geometry");
    EXPECT_EQ(expect_validation_key(base_text(), {"environment.loss_probability=1"}),
              "environment.loss_probability");
    EXPECT_EQ(expect_validation_key(base_text(), {"blockade.shift_mhz=10"}), "blockade.shift_mhz");
    EXPECT_EQ(expect_validation_key(base_text(), {"level.g_R=2.5"}), "level.g_R");
    EXPECT_EQ(expect_validation_key(base_text() + "level.spin = 1\n"), "level.spin");
    EXPECT_EQ(expect_validation_key(base_text() + "level.n = 150\n"), "level.n");
    EXPECT_EQ(expect_validation_key(without_key(base_text(), "laser.lambda_2_nm")), "laser.lambda_2_nm");
    EXPECT_THROW(parse_config_text(base_text(), {"nonsense"}), ValidationError);
}

TEST(Config, GROverrideWithinOnePercent) {
    const auto cfg = fixtures::operating_point_150s({"level.g_R=2.0023"});
    EXPECT_DOUBLE_EQ(cfg.level.g_R, 2.0023);
}

TEST(Config, CounterPropagatingWavenumber) {
    const auto cfg = fixtures::ramsey_97d({"laser.geometry=counter"});
    EXPECT_NEAR(cfg.k_2nu(), 2.0 * M_PI / 480e-9 + 2.0 * M_PI / 780e-9, 1e-3);
    EXPECT_NEAR(cfg.k_2nu(), 2.11e7, 0.005e7);
}

TEST(Config, SmallDetuningWarns) {
    const auto cfg = fixtures::operating_point_150s({"laser.detuning_ghz=0.1"});
    ASSERT_FALSE(cfg.warnings.empty());
    EXPECT_NE(cfg.warnings.front().find("laser.detuning_ghz"), std::string::npos);
}

TEST(Config, InfinitySentinelsAccepted) {
    const auto cfg = fixtures::ramsey_97d({"species.hf_splitting_ghz=inf"});
    EXPECT_TRUE(std::isinf(cfg.level.tau));
    EXPECT_TRUE(std::isinf(cfg.species.omega_hf));
    EXPECT_TRUE(std::isinf(cfg.blockade_shift()));
}

TEST(Config, SerializeRoundTrip) {
    for (const auto &cfg : {fixtures::operating_point_150s(), fixtures::ramsey_97d(),
                            fixtures::operating_point_150s({"level.n=100", "environment.gap_time_us=0.5"})}) {
        const auto again = parse_config_text(serialize(cfg));
        EXPECT_EQ(again, cfg);
        EXPECT_EQ(serialize(again), serialize(cfg));
        EXPECT_EQ(config_hash(again), config_hash(cfg));
    }
}

TEST(Config, HashChangesWithContent) {
    EXPECT_NE(config_hash(fixtures::operating_point_150s()),
              config_hash(fixtures::operating_point_150s({"laser.rabi_mhz=31"})));
}

TEST(Config, LoadFromFileAndSearchPath) {
    const std::filesystem::path dir = std::filesystem::path(RYDBERG_SOURCE_DIR) / "configs";
    const auto direct = load_config(dir / "op150s.cfg");
    EXPECT_EQ(direct, fixtures::operating_point_150s());

    ::setenv("RYDBERG_CONFIG_PATH", ("/nonexistent:" + dir.string()).c_str(), 1);
    const auto searched = load_config("op150s_table.cfg");
    ::unsetenv("RYDBERG_CONFIG_PATH");
    EXPECT_NEAR(searched.blockade_shift() / direct.blockade_shift(), 1.0, 1e-12);
    // The table path serializes as an absolute path, so the reparse is
    // compared through its canonical text and samples.
    const auto again = parse_config_text(serialize(searched));
    EXPECT_EQ(serialize(again), serialize(searched));
    EXPECT_EQ(std::get<TabulatedBlockade>(again.blockade).samples,
              std::get<TabulatedBlockade>(searched.blockade).samples);

    EXPECT_THROW(load_config(dir / "missing.cfg"), ValidationError);
}

TEST(Config, FileOverridesApplyBeforeValidation) {
    const std::filesystem::path dir = std::filesystem::path(RYDBERG_SOURCE_DIR) / "configs";
    const auto cfg = load_config(dir / "op150s.cfg", {"environment.sigma_T=0", "level.n=125"});
    EXPECT_EQ(cfg.environment.sigma, 0.0);
    EXPECT_DOUBLE_EQ(cfg.level.tau, 570e-6);
}

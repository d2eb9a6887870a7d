#pragma once

#include <string>
#include <vector>

#include "tradeopt/economy.hpp"
#include "tradeopt/hat_system.hpp"

namespace tradeopt {

// A policy instrument controlled by one player. Subsidies are stored as the
// subsidy rate s and enter the wedges as e = -s on every route of the owner.
struct Instrument {
  enum class Kind { ImportTariff, SectorSubsidy, UniformSubsidy };
  Kind kind;
  int owner;        // country setting the instrument
  int origin = -1;  // ImportTariff: exporting country
  int sector = -1;  // ImportTariff / SectorSubsidy
  std::vector<int> sectors;  // UniformSubsidy
  double lower = 0.0;
  double upper = 0.0;

  std::string describe() const;
};

using InstrumentList = std::vector<Instrument>;

// Overlays instrument values onto the baseline wedge levels.
template <class T>
void apply_instruments(const Calibration& cal, const InstrumentList& instruments,
                       const std::vector<T>& values, WedgeT<T>& wedges) {
  for (std::size_t k = 0; k < instruments.size(); ++k) {
    const Instrument& a = instruments[k];
    switch (a.kind) {
      case Instrument::Kind::ImportTariff:
        wedges.tariff[cal.route(a.origin, a.owner, a.sector)] = values[k];
        break;
      case Instrument::Kind::SectorSubsidy:
        for (int n = 0; n < cal.N; ++n)
          wedges.export_wedge[cal.route(a.owner, n, a.sector)] = -values[k];
        break;
      case Instrument::Kind::UniformSubsidy:
        for (int j : a.sectors)
          for (int n = 0; n < cal.N; ++n) wedges.export_wedge[cal.route(a.owner, n, j)] = -values[k];
        break;
    }
  }
}

PolicyWedges build_wedges(const Calibration& cal, const InstrumentList& instruments,
                          const std::vector<double>& values);

std::vector<int> owned_by(const InstrumentList& instruments, int player);

}  // namespace tradeopt

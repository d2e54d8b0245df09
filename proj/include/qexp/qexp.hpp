#ifndef QEXP_QEXP_HPP
#define QEXP_QEXP_HPP

// Umbrella header for the library (the CLI layer lives in qexp/cli.hpp).

#include "qexp/curvefit.hpp"
#include "qexp/diagnostics.hpp"
#include "qexp/distribution.hpp"
#include "qexp/errors.hpp"
#include "qexp/estimation.hpp"
#include "qexp/inference.hpp"
#include "qexp/io.hpp"
#include "qexp/mc_harness.hpp"
#include "qexp/params.hpp"
#include "qexp/quantile.hpp"
#include "qexp/resampling.hpp"
#include "qexp/rng.hpp"
#include "qexp/sample.hpp"

#endif  // QEXP_QEXP_HPP

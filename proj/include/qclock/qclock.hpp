#pragma once

#include "qclock/analysis.hpp"
#include "qclock/clock.hpp"
#include "qclock/complex_erf.hpp"
#include "qclock/hilbert.hpp"
#include "qclock/io.hpp"
#include "qclock/lab.hpp"
#include "qclock/twirl.hpp"

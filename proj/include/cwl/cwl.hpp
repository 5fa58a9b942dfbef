#pragma once

#include "cwl/bounds.hpp"
#include "cwl/committee.hpp"
#include "cwl/csv.hpp"
#include "cwl/errors.hpp"
#include "cwl/estimation.hpp"
#include "cwl/oracle.hpp"
#include "cwl/rng.hpp"
#include "cwl/rules.hpp"
#include "cwl/sim.hpp"
#include "cwl/version.hpp"

#pragma once

#include "realstrata/integer.hpp"
#include "realstrata/rational.hpp"
#include "realstrata/abelian.hpp"
#include "realstrata/fqf.hpp"
#include "realstrata/subgroup.hpp"
#include "realstrata/isotropy.hpp"
#include "realstrata/automorphism.hpp"
#include "realstrata/lattices.hpp"
#include "realstrata/candidate.hpp"
#include "realstrata/nikulin.hpp"
#include "realstrata/detector.hpp"
#include "realstrata/report.hpp"
#include "realstrata/oracle.hpp"

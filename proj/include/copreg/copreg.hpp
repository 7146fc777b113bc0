#pragma once
#include <copreg/errors.hpp>
#include <copreg/dists.hpp>
#include <copreg/sigma.hpp>
#include <copreg/copula.hpp>
#include <copreg/data.hpp>
#include <copreg/lbfgsb.hpp>
#include <copreg/parallel.hpp>
#include <copreg/solver.hpp>
#include <copreg/tuning.hpp>
#include <copreg/resample.hpp>
#include <copreg/experiments.hpp>
#include <copreg/serialize.hpp>
#include <copreg/cli.hpp>

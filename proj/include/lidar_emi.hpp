#ifndef LIDAR_EMI_HPP
#define LIDAR_EMI_HPP

#include "lidar_emi/attack.hpp"
#include "lidar_emi/cloud_io.hpp"
#include "lidar_emi/config.hpp"
#include "lidar_emi/corruptor.hpp"
#include "lidar_emi/emi.hpp"
#include "lidar_emi/error.hpp"
#include "lidar_emi/fdd.hpp"
#include "lidar_emi/geometry.hpp"
#include "lidar_emi/kdtree.hpp"
#include "lidar_emi/metrics.hpp"
#include "lidar_emi/monitoring.hpp"
#include "lidar_emi/point_cloud.hpp"
#include "lidar_emi/random.hpp"
#include "lidar_emi/scan.hpp"
#include "lidar_emi/scene.hpp"
#include "lidar_emi/schedule.hpp"
#include "lidar_emi/signal_chain.hpp"
#include "lidar_emi/waveform.hpp"

#endif  // LIDAR_EMI_HPP

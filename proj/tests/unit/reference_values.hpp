#pragma once

// Values produced by tests/reference/make_reference.py (mpmath, 50 digits).
//
// Small:  (J, K) = (1, 2), a = (1, 2), NG(0,1,2,2) and NG(1,2,3,4), y = 0.7.
// Order:  the same prior updated with 0.7 then -1.5, and with -1.5 then 0.7.
// Far:    a = (1, 1), NG(0,1,1,1) and NG(10,1,1,1), y = 0; responsibility of class 2.
// Wide:   the (J, K) = (2, 3) instance in make_reference.py, y = (0.3, -0.2).
//
// Parameter arrays are flattened as a, then per class mu, lambda, alpha, beta.

namespace semmap::reference {

inline constexpr double kDigammaHalf = -1.9635100260214235;
inline constexpr double kSmallLogM = -1.3785387720849891;
inline constexpr double kSmallResp[] = {0.3023726728005038, 0.6976273271994962};
inline constexpr double kSmallEw[] = {0.32559316820012595, 0.67440683179987405};
inline constexpr double kSmallEw2[] = {0.16047453456010076, 0.50928819815984886};
inline constexpr double kSmall_em[] = {0.10583043548017633, 0.93023726728005038};
inline constexpr double kSmall_etau[] = {1.0537788852684053, 0.83265931730465495};
inline constexpr double kSmall_etau2[] = {1.6337344905595184, 0.90332023838927287};
inline constexpr double kSmall_emtau[] = {0.12465304532411817, 0.77207133603422724};
inline constexpr double kSmall_em2tau[] = {0.89244222946318946, 1.1012709316909263};
inline constexpr double kSmallPrecisionWeighted[] = {0.98710838019616626, 2.0446148763232696, 0.11829146234256546, 1.139345564660059, 2.122076670919735, 2.0137779382239438, 0.92723556920427798, 2.5948486802231934, 3.3015515796105649, 3.9650689195405797};
inline constexpr double kSmallFirstMoment[] = {0.98710838019616626, 2.0446148763232696, 0.10583043548017633, 1.1355380221349891, 2.122076670919735, 2.0137779382239438, 0.93023726728005038, 2.6264892642458678, 3.3015515796105649, 3.9650689195405797};
inline constexpr double kOrderForward[] = {1.1113761660574821, 1.86697421833445, -0.256825489632541, 1.2349091267860734, 2.3189457126136834, 2.2983471914534341, 0.64938094032475895, 2.4128352750632359, 3.1713392488958524, 4.3324941089223003};
inline constexpr double kOrderReverse[] = {1.1055610402547275, 1.9045148044239162, -0.22461015277694758, 1.2493644327495026, 2.3760403928688011, 2.3531771427339614, 0.67402486231442726, 2.4543431591979791, 3.2319737676619816, 4.3342161570235882};
inline constexpr double kFarResponsibility = 0.0074864584553861966;
inline constexpr double kWideLogM = -2.3700199642996797;
inline constexpr double kWidePrecisionWeighted[] = {1.4764753659004279, 0.69224298991283134, 3.1676526851741543, 0.21612488788211907, -0.94171800688453132, 0.58317242806275163, 2.0394253261306831, 3.0662888137960396, 1.5879300337428352, 1.9739120489307306, 0.73756347597311471, 0.97104142633890216, 0.44907961397847482, 1.2170702072806749, 0.31794913185404186, 2.5381703480234062, 4.0293727908906137, 1.0101580145540306, 2.9950634445248406, -0.27644152387502934, -0.074160607728070296, 3.5102483859496336, 1.5264466667306379, 6.3363940354107598, 2.3020259189547926, 4.1213079087279674, 0.98712210396815765};
inline constexpr double kWideFirstMoment[] = {1.4764753659004279, 0.69224298991283134, 3.1676526851741543, 0.21432536436113834, -0.94269854255544665, 0.58276349231688026, 2.0561064640972193, 3.0662888137960396, 1.5879300337428352, 1.9739120489307306, 0.73756347597311471, 0.97250453093385299, 0.45346920619575122, 1.2277466365071465, 0.31848886389198326, 2.5381703480234062, 4.0293727908906137, 1.0101580145540306, 2.9950634445248406, -0.27772658943436899, -0.06987052032321772, 3.5237916079219931, 1.5230964656066963, 6.3363940354107598, 2.3020259189547926, 4.1213079087279674, 0.98712210396815765};

} // namespace semmap::reference

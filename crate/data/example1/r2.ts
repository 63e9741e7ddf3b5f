# robot 2
name r2
rho 0.95 1.05
init a
state a
state b props p2 pi
state c props p3
edge a b 2
edge b a 2
edge b c 1
edge c b 1

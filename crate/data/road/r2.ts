# robot 2 on the road network; 18 and 20 gather, 22 uploads
name r2
rho 0.95 1.05
init 21
state 18 props R2Gather18 R2Gather Gather
state 19
state 20 props R2Gather20 R2Gather Gather
state 21
state 22 props R2Upload
state 23
state 24
edge 18 19 2
edge 19 18 2
edge 19 20 2
edge 20 19 2
edge 20 21 2
edge 21 20 2
edge 21 22 1
edge 22 21 1
edge 22 23 1
edge 23 22 1
edge 23 18 2
edge 18 23 2
edge 19 24 1
edge 24 19 1
edge 24 22 2
edge 22 24 2

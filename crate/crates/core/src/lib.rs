pub mod compare;
pub mod graphtransform;
pub mod interp;
pub mod mapdef;
pub mod normalform;
pub mod parameterization;
pub mod poly;
pub mod series;
pub mod shadowing;

//! Rotation matrices, exponential coordinates and the attitude error.

use se3_ekf::geom::{attitude_error, exp_so3, hat, log_so3, project_so3, vee, RotationMatrix};
use se3_ekf::{Mat3, Vec3};

fn main() -> se3_ekf::Result<()> {
    let eta = Vec3::new(0.3, -0.4, 1.2);
    let r = exp_so3(&eta);
    println!("exp({eta:?}) =\n{}", r.matrix());
    println!("log(exp(eta)) = {:?}", log_so3(&r)?.as_slice());
    println!("vee(hat(eta)) = {:?}", vee(&hat(&eta))?.as_slice());

    let target = RotationMatrix::identity();
    let (psi, e_r) = attitude_error(&r, &target);
    println!("Psi = {psi:.6}, |e_R|^2 = {:.6}, Psi(2 - Psi) = {:.6}", e_r.norm_squared(), psi * (2.0 - psi));

    // A drifted matrix pulled back onto SO(3).
    let drifted = r.matrix() + Mat3::from_element(1e-3);
    let fixed = project_so3(&drifted)?;
    println!("orthogonality error before {:.2e}, after {:.2e}",
        (drifted.transpose() * drifted - Mat3::identity()).norm(),
        fixed.orthogonality_error());

    let small = r.retract(&Vec3::new(0.0, 0.0, 0.01));
    println!("retracting by 0.01 rad about body z moves the attitude by {:.4} rad",
        log_so3(&(r.transpose() * small))?.norm());
    Ok(())
}

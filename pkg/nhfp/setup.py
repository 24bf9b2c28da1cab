from setuptools import find_packages, setup
import glob
import os

package_name = "nhfp"

setup(
    name=package_name,
    version="1.0.0",
    packages=find_packages(exclude=["test"]),
    data_files=[
        (os.path.join("share", package_name, "config"), glob.glob("config/*.yaml")),
    ],
    install_requires=["setuptools", "numpy", "scipy", "PyYAML"],
    zip_safe=True,
    maintainer="Adam Cordingley",
    maintainer_email="adam@repoweredelectronics.com",
    description="Non-Hermitian Floquet pumping in the driven lossy Rice-Mele chain",
    license="Apache License 2.0",
    tests_require=["pytest"],
    entry_points={
        "console_scripts": [
            "nhfp = nhfp.cli:main",
        ],
    },
)

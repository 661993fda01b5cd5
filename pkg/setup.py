from setuptools import find_packages, setup


setup(
    name="inertiaforge",
    version="0.1.0",
    description="Transmission-grid frequency dynamics: RoCoF, Fiedler-mode analysis and inertia placement",
    package_dir={"": "src"},
    packages=find_packages("src"),
    install_requires=[
        "haversine==2.9.0",
        "numpy<2.0",
        "pandas==2.2.3",
        "scipy==1.13.1",
        "shapely==2.1.2",
    ],
    python_requires=">=3.10",
    entry_points={
        "console_scripts": [
            "inertiaforge=inertiaforge.cli:main",
        ]
    },
)
